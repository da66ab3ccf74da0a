use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{HjError, RelativeDynamics, RoadDynamics, SubsystemSpec, ValueGrid};
use crate::geometry::Vec2;
use crate::vehicle::{Control, InputBounds, UnicycleState, VehicleFootprint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HjSettings {
    /// Backward horizon (s).
    pub horizon: f64,
    /// Early-stop threshold on the largest per-step value change.
    pub tol: f64,
    /// Candidate values per input channel for control extraction.
    pub input_levels: usize,
}

impl Default for HjSettings {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            tol: 1e-3,
            input_levels: 9,
        }
    }
}

/// Converged value grids of every subsystem; the whole-system value is
/// their minimum.
#[derive(Debug, Clone)]
pub struct HjPolicy {
    pub relative: Arc<ValueGrid>,
    pub road: Arc<ValueGrid>,
    /// Global position of the road grid's origin.
    pub road_origin: Vec2,
    pub ego_bounds: InputBounds,
    pub obstacle_bounds: InputBounds,
    pub input_levels: usize,
}

/// Control chosen by the policy with the subsystem values behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct HjControl {
    pub input: Control,
    /// One value per obstacle followed by the road value.
    pub values: Vec<f64>,
    /// Index into `values` of the subsystem that picked the input.
    pub selected: usize,
    /// Some query fell outside a bounded grid axis and was clamped.
    pub clamped: bool,
}

fn levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn effort(c: Control, b: &InputBounds) -> f64 {
    (c[0] / b.span(0)).abs() + (c[1] / b.span(1)).abs()
}

/// Max–min control of the subsystem with the smallest value.
pub fn hj_control(
    ego: &UnicycleState,
    obstacles: &[UnicycleState],
    policy: &HjPolicy,
) -> HjControl {
    let mut values = Vec::with_capacity(obstacles.len() + 1);
    let mut clamped = false;
    let relative_states: Vec<[f64; 6]> = obstacles
        .iter()
        .map(|o| [o.x - ego.x, o.y - ego.y, ego.psi, o.psi, ego.u, o.u])
        .collect();
    for z in &relative_states {
        let (v, c) = policy.relative.interpolate(z);
        values.push(v);
        clamped |= c;
    }
    let road_state = [
        ego.x - policy.road_origin.x,
        ego.y - policy.road_origin.y,
        ego.psi,
        ego.u,
    ];
    let (v, c) = policy.road.interpolate(&road_state);
    values.push(v);
    clamped |= c;

    let selected = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("road subsystem always present");

    let eb = &policy.ego_bounds;
    let ob = &policy.obstacle_bounds;
    let n = policy.input_levels;
    let ego_r = levels(eb.lo[0], eb.hi[0], n);
    let ego_a = levels(eb.lo[1], eb.hi[1], n);
    let ego_candidates: Vec<Control> = ego_r
        .iter()
        .flat_map(|&r| ego_a.iter().map(move |&a| [r, a]))
        .collect();

    let score: Box<dyn Fn(Control) -> f64> = if selected < obstacles.len() {
        let z = relative_states[selected];
        let p = policy.relative.gradient(&z);
        let obs_r = levels(ob.lo[0], ob.hi[0], n);
        let obs_a = levels(ob.lo[1], ob.hi[1], n);
        let disturbances: Vec<Control> = obs_r
            .iter()
            .flat_map(|&r| obs_a.iter().map(move |&a| [r, a]))
            .collect();
        Box::new(move |c| {
            disturbances
                .iter()
                .map(|&d| {
                    let f = RelativeDynamics::flow(&z, c, d);
                    p.iter().zip(f).map(|(pi, fi)| pi * fi).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
    } else {
        let p = policy.road.gradient(&road_state);
        Box::new(move |c| {
            let f = RoadDynamics::flow(&road_state, c);
            p.iter().zip(f).map(|(pi, fi)| pi * fi).sum::<f64>()
        })
    };

    let mut input = ego_candidates[0];
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for &c in &ego_candidates {
        let s = score(c);
        let e = effort(c, eb);
        if s > best.0 || (s == best.0 && e < best.1) {
            best = (s, e);
            input = c;
        }
    }
    HjControl {
        input,
        values,
        selected,
        clamped,
    }
}

/// Directory of precomputed value grids keyed by their inputs.
#[derive(Debug, Clone)]
pub struct HjCache {
    pub dir: PathBuf,
}

/// Bumped whenever target construction or the solver changes what a given
/// spec produces.
const CACHE_FORMAT: u32 = 2;

fn spec_key(spec: &SubsystemSpec, settings: &HjSettings) -> String {
    let mut h = DefaultHasher::new();
    CACHE_FORMAT.hash(&mut h);
    let mut put = |x: f64| x.to_bits().hash(&mut h);
    put(settings.horizon);
    put(settings.tol);
    let (prefix, bounds, footprint): (&str, Vec<&InputBounds>, &VehicleFootprint) = match spec {
        SubsystemSpec::Relative {
            ego,
            obstacle,
            footprint,
        } => ("relative", vec![ego, obstacle], footprint),
        SubsystemSpec::Road {
            ego,
            footprint,
            region,
            origin,
        } => {
            for v in region {
                put(v.x);
                put(v.y);
            }
            put(origin.x);
            put(origin.y);
            ("road", vec![ego], footprint)
        }
    };
    for b in bounds {
        b.lo.iter().chain(&b.hi).for_each(|&x| put(x));
    }
    put(footprint.length);
    put(footprint.width);
    for a in spec.axes() {
        put(a.lo);
        put(a.hi);
        put(a.n as f64);
    }
    format!("{prefix}_{:016x}.hjvg", h.finish())
}

impl HjCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Loads the grid for `spec` if cached, otherwise solves and stores it.
    pub fn load_or_solve(
        &self,
        spec: &SubsystemSpec,
        settings: &HjSettings,
    ) -> Result<ValueGrid, HjError> {
        let path = self.dir.join(spec_key(spec, settings));
        if let Ok(grid) = ValueGrid::load(&path) {
            if grid.axes() == spec.axes().as_slice() {
                return Ok(grid);
            }
        }
        let grid = spec.solve(settings.horizon, settings.tol)?;
        std::fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("tmp");
        grid.save(&tmp)?;
        std::fs::rename(&tmp, &path)?;
        Ok(grid)
    }
}
