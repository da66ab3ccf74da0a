//! File outputs: batch report CSV, run metadata, per-episode traces and
//! hand-written SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec2};
use crate::mpc::{MpcProblem, SamplerSettings};
use crate::sim::{BatchReport, EpisodeResult, SimSettings, SweepRow};
use crate::vehicle::{VehicleFootprint, VehicleState};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize)]
struct ReportLine<'a> {
    scenario: &'a str,
    controller: &'a str,
    model: &'a str,
    protection: &'a str,
    protection_q: String,
    cases: usize,
    successes: usize,
    collisions: usize,
    driver_hits: usize,
    success_rate_pct: String,
    driver_hit_rate_pct: String,
}

/// Writes one line per scenario row of every report. Rates carry four
/// decimals so identical runs give identical bytes.
pub fn write_report_csv<W: io::Write>(out: W, reports: &[BatchReport]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for row in &r.rows {
            w.serialize(ReportLine {
                scenario: &row.scenario,
                controller: r.controller.name(),
                model: &r.model,
                protection: if r.protection { "on" } else { "off" },
                protection_q: format!("{:.3}", r.protection_q),
                cases: row.cases,
                successes: row.successes,
                collisions: row.collisions,
                driver_hits: row.driver_hits,
                success_rate_pct: format!("{:.4}", row.success_rate_pct),
                driver_hit_rate_pct: format!("{:.4}", row.driver_hit_rate_pct),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_report_csv(path: &Path, reports: &[BatchReport]) -> Result<(), ReportError> {
    write_report_csv(fs::File::create(path)?, reports)
}

/// Settings that shape every reported number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub separation_steps: usize,
    pub t_max: f64,
    pub r_driver: f64,
    pub period: f64,
    pub substeps: usize,
    pub seed: u64,
    pub horizon: usize,
    pub sampler: SamplerSettings,
    pub footprint: VehicleFootprint,
}

impl RunMeta {
    pub fn new(
        sim: &SimSettings,
        seed: u64,
        problem: &MpcProblem,
        sampler: &SamplerSettings,
    ) -> Self {
        Self {
            separation_steps: sim.separation_steps,
            t_max: sim.t_max,
            r_driver: sim.r_driver,
            period: sim.period,
            substeps: sim.substeps,
            seed,
            horizon: problem.horizon,
            sampler: *sampler,
            footprint: problem.footprint,
        }
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn state_names(s: &VehicleState) -> &'static [&'static str] {
    match s {
        VehicleState::Unicycle(_) => &["x", "y", "psi", "u"],
        VehicleState::Bicycle(_) => &["x", "y", "psi", "u", "v", "r"],
    }
}

fn input_names(s: &VehicleState) -> [&'static str; 2] {
    match s {
        VehicleState::Unicycle(_) => ["r_cmd", "a_cmd"],
        VehicleState::Bicycle(_) => ["fx_cmd", "delta_cmd"],
    }
}

/// Per-step trace: time, every vehicle's state, controlled inputs, and the
/// smallest ego–obstacle distance.
pub fn write_episode_csv<W: io::Write>(out: W, episode: &EpisodeResult) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = episode.steps.first() else {
        return Ok(());
    };
    let mut header = vec!["t".to_string()];
    for (i, s) in first.states.iter().enumerate() {
        header.extend(state_names(s).iter().map(|n| format!("v{i}_{n}")));
    }
    for (i, s) in first.states.iter().take(episode.controlled).enumerate() {
        header.extend(input_names(s).iter().map(|n| format!("v{i}_{n}")));
    }
    header.push("min_dist".into());
    w.write_record(&header)?;
    for step in &episode.steps {
        let mut rec = vec![format!("{:.4}", step.t)];
        for s in &step.states {
            rec.extend(s.components().iter().map(|v| format!("{v:.6}")));
        }
        for c in step.inputs.iter().take(episode.controlled) {
            rec.extend(c.iter().map(|v| format!("{v:.6}")));
        }
        rec.push(format!("{:.6}", step.min_dist));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: io::Write>(out: W, rows: &[SweepRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "success_rate_pct", "driver_hit_rate_pct"])?;
    for r in rows {
        w.write_record([
            format!("{:.3}", r.q),
            format!("{:.4}", r.success_rate_pct),
            format!("{:.4}", r.driver_hit_rate_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const COLORS: [&str; 4] = ["#1f5fbf", "#c0392b", "#d68910", "#7d3c98"];

/// Maps world coordinates into an SVG viewport with y pointing up.
struct Frame {
    lo: Vec2,
    scale: f64,
    height: f64,
    pad: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Vec2>, width: f64, pad: f64) -> Self {
        let (mut lo, mut hi) = (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.x.is_finite() {
            lo = Vec2::ZERO;
            hi = Vec2::new(1.0, 1.0);
        }
        let span = (hi - lo).x.max((hi - lo).y).max(1.0);
        let scale = width / span;
        Self {
            lo,
            scale,
            height: (hi.y - lo.y).max(1.0) * scale,
            pad,
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            self.pad + (p.x - self.lo.x) * self.scale,
            self.pad + self.height - (p.y - self.lo.y) * self.scale,
        )
    }

    fn points(&self, pts: impl Iterator<Item = Vec2>) -> String {
        let mut s = String::new();
        for p in pts {
            let (x, y) = self.map(p);
            let _ = write!(s, "{x:.2},{y:.2} ");
        }
        s.trim_end().to_string()
    }
}

/// Top-down trajectory plot: drivable region, every vehicle's path, and its
/// footprint at a few instants. The ego's driver point is marked.
pub fn trajectory_svg(
    episode: &EpisodeResult,
    region: &[Vec2],
    footprint: &VehicleFootprint,
) -> String {
    let path_points = episode
        .steps
        .iter()
        .flat_map(|s| s.states.iter().map(|v| v.pose().position));
    let margin = 2.0 * footprint.length;
    let bounds =
        path_points.flat_map(|p| [p - Vec2::new(margin, margin), p + Vec2::new(margin, margin)]);
    let frame = Frame::fit(bounds, 800.0, 20.0);
    let w = 800.0 + 2.0 * frame.pad;
    let h = frame.height + 2.0 * frame.pad;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#8a8a8a"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<polygon points="{}" fill="#f4f4f4" stroke="#222" stroke-width="1.5"/>"##,
        frame.points(region.iter().copied())
    );

    let n = episode.steps.first().map_or(0, |s| s.states.len());
    let every = (episode.steps.len() / 5).max(1);
    for v in 0..n {
        let color = COLORS[v.min(COLORS.len() - 1)];
        let path = frame.points(episode.steps.iter().map(|s| s.states[v].pose().position));
        let _ = writeln!(
            svg,
            r#"<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="4 2"/>"#
        );
        for (k, s) in episode.steps.iter().enumerate() {
            let last = k + 1 == episode.steps.len();
            if k % every != 0 && !last {
                continue;
            }
            let pose: Pose = s.states[v].pose();
            let rect = footprint.rect(pose);
            let opacity = if last { 0.9 } else { 0.35 };
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="{opacity}" stroke="{color}"/>"#,
                frame.points(rect.corners().into_iter())
            );
            if v == 0 {
                let (x, y) = frame.map(footprint.driver_point(pose));
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#111"/>"##
                );
            }
        }
    }
    if let Some(c) = &episode.contact {
        let (x, y) = frame.map(c.point_world);
        let _ = writeln!(
            svg,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="#e60000" stroke-width="2"/>"##
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="10" y="16" font-family="sans-serif" font-size="13" fill="#111">{} {} {:?}</text>"##,
        episode.id(),
        episode.controller.name(),
        episode.outcome
    );
    svg.push_str("</svg>\n");
    svg
}

/// Applied inputs of the ego against time, one panel per channel, with the
/// bounds drawn as dashed lines.
pub fn inputs_svg(episode: &EpisodeResult, bounds: &crate::vehicle::InputBounds) -> String {
    let (pw, ph, pad) = (640.0, 180.0, 40.0);
    let w = pw + 2.0 * pad;
    let h = 2.0 * (ph + pad) + pad;
    let names = episode
        .steps
        .first()
        .map_or(["u0", "u1"], |s| input_names(&s.states[0]));
    let steps: Vec<_> = episode
        .steps
        .iter()
        .take(episode.steps.len().saturating_sub(1))
        .collect();
    let t_end = episode
        .steps
        .last()
        .map_or(1.0, |s| s.t)
        .max(episode.steps.first().map_or(0.0, |s| s.t) + 1e-9);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    for ch in 0..2 {
        let top = pad + ch as f64 * (ph + pad);
        let (lo, hi) = (bounds.lo[ch], bounds.hi[ch]);
        let span = (hi - lo).max(1e-9);
        let x_of = |t: f64| pad + pw * t / t_end;
        let y_of = |v: f64| top + ph * (1.0 - (v - lo) / span);
        let _ = writeln!(
            svg,
            r##"<rect x="{pad}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for b in [lo, hi] {
            let y = y_of(b);
            let _ = writeln!(
                svg,
                r##"<line x1="{pad}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999" stroke-dasharray="5 3"/>"##,
                pad + pw
            );
        }
        if lo < 0.0 && hi > 0.0 {
            let y = y_of(0.0);
            let _ = writeln!(
                svg,
                r##"<line x1="{pad}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/>"##,
                pad + pw
            );
        }
        // zero-order hold
        let mut pts = String::new();
        for (k, s) in steps.iter().enumerate() {
            let t1 = steps.get(k + 1).map_or(t_end, |n| n.t);
            let y = y_of(s.inputs[0][ch]);
            let _ = write!(pts, "{:.2},{y:.2} {:.2},{y:.2} ", x_of(s.t), x_of(t1));
        }
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#1f5fbf" stroke-width="1.8"/>"##,
            pts.trim_end()
        );
        let _ = writeln!(
            svg,
            r##"<text x="{pad}" y="{:.0}" font-family="sans-serif" font-size="12">{} [{lo:.2}, {hi:.2}]</text>"##,
            top - 6.0,
            names[ch]
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="12" text-anchor="end">t = {t_end:.2} s</text>"##,
        pad + pw,
        h - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `episode_<id>.csv`, `episode_<id>.json`, `episode_<id>.svg` and
/// `inputs_<id>.svg` into `dir`.
pub fn save_episode(
    dir: &Path,
    episode: &EpisodeResult,
    region: &[Vec2],
    footprint: &VehicleFootprint,
    bounds: &crate::vehicle::InputBounds,
) -> Result<(), ReportError> {
    fs::create_dir_all(dir)?;
    let id = episode.id();
    write_episode_csv(
        fs::File::create(dir.join(format!("episode_{id}.csv")))?,
        episode,
    )?;
    save_json(&dir.join(format!("episode_{id}.json")), episode)?;
    fs::write(
        dir.join(format!("episode_{id}.svg")),
        trajectory_svg(episode, region, footprint),
    )?;
    fs::write(
        dir.join(format!("inputs_{id}.svg")),
        inputs_svg(episode, bounds),
    )?;
    Ok(())
}
