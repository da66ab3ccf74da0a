//! Line-charge potentials and the potential energy of a charged ego body
//! placed among charged obstacles and road structures.
//!
//! All bodies are built from finite line charges; straight roadsides are
//! infinite line charges with a zero-potential distance `d0`. Energies between
//! two finite segments have no closed form and are integrated numerically over
//! the target segment with a fixed 16-node Gauss-Legendre rule; the inner
//! potential of the source segment is evaluated in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_in_polygon, segments_intersect, OrientedRect, Vec2};
use crate::quadrature::segment_rule;

/// Energy reported for any intersecting pair of charges.
pub const SENTINEL_ENERGY: f64 = 1e9;

/// Below this |sin θ| the segment/infinite-line energy uses the parallel limit.
pub const PARALLEL_EPS: f64 = 1e-6;

const SINGULAR_DISTANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChargeError {
    #[error("evaluation point lies on the charged line")]
    SingularPotential,
    #[error("charges intersect; potential energy is infinite")]
    InfiniteEnergy,
    #[error("line charge endpoints coincide")]
    DegenerateSegment,
    #[error("invalid charged body: {0}")]
    InvalidBody(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConstants {
    pub k: f64,
}

impl Default for FieldConstants {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteLineCharge {
    pub p0: Vec2,
    pub p1: Vec2,
    /// Linear charge density (C/m).
    pub lambda: f64,
}

impl FiniteLineCharge {
    pub fn new(p0: Vec2, p1: Vec2, lambda: f64) -> Result<Self, ChargeError> {
        if p0 == p1 {
            return Err(ChargeError::DegenerateSegment);
        }
        Ok(Self { p0, p1, lambda })
    }

    pub fn length(&self) -> f64 {
        self.p0.distance(self.p1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfiniteLineCharge {
    pub anchor: Vec2,
    /// Unit direction.
    pub direction: Vec2,
    pub lambda: f64,
    /// Distance at which the potential is zero.
    pub d0: f64,
}

impl InfiniteLineCharge {
    pub fn new(anchor: Vec2, direction: Vec2, lambda: f64, d0: f64) -> Self {
        Self {
            anchor,
            direction: direction.normalized(),
            lambda,
            d0,
        }
    }

    /// Signed perpendicular offset of `p` (positive on the left of `direction`).
    pub fn signed_offset(&self, p: Vec2) -> f64 {
        self.direction.cross(p - self.anchor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCharge {
    pub position: Vec2,
    pub q: f64,
}

/// Closed polygon of finite line charges with optional point charges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargedBody {
    segments: Vec<FiniteLineCharge>,
    point_charges: Vec<PointCharge>,
    weight: f64,
}

impl ChargedBody {
    /// Builds a body from polygon vertices; consecutive vertices become segments
    /// and the last vertex connects back to the first.
    pub fn polygon(vertices: &[Vec2], lambda: f64, weight: f64) -> Result<Self, ChargeError> {
        if vertices.len() < 3 {
            return Err(ChargeError::InvalidBody("fewer than three vertices".into()));
        }
        if !(weight > 0.0) {
            return Err(ChargeError::InvalidBody(format!(
                "weight {weight} must be positive"
            )));
        }
        let n = vertices.len();
        let segments = (0..n)
            .map(|i| FiniteLineCharge::new(vertices[i], vertices[(i + 1) % n], lambda))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (&segments[i], &segments[j]);
                if segments_intersect(a.p0, a.p1, b.p0, b.p1) {
                    return Err(ChargeError::InvalidBody(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(Self {
            segments,
            point_charges: Vec::new(),
            weight,
        })
    }

    /// Vehicle body: four segments along the rectangle outline.
    pub fn rectangle(rect: &OrientedRect, lambda: f64, weight: f64) -> Self {
        let c = rect.corners();
        let segments = (0..4)
            .map(|i| FiniteLineCharge {
                p0: c[i],
                p1: c[(i + 1) % 4],
                lambda,
            })
            .collect();
        Self {
            segments,
            point_charges: Vec::new(),
            weight,
        }
    }

    pub fn with_point_charge(mut self, charge: PointCharge) -> Self {
        self.point_charges.push(charge);
        self
    }

    pub fn segments(&self) -> &[FiniteLineCharge] {
        &self.segments
    }

    pub fn point_charges(&self) -> &[PointCharge] {
        &self.point_charges
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn set_weight(&mut self, weight: f64) {
        self.weight = weight;
    }

    pub fn vertices(&self) -> Vec<Vec2> {
        self.segments.iter().map(|s| s.p0).collect()
    }
}

/// Static road charges: infinite roadsides and long finite walls.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoadCharges {
    pub infinite: Vec<InfiniteLineCharge>,
    pub finite: Vec<FiniteLineCharge>,
    pub weight: f64,
}

impl RoadCharges {
    pub fn is_empty(&self) -> bool {
        self.infinite.is_empty() && self.finite.is_empty()
    }
}

/// Axial frame of a finite segment used to evaluate its potential quickly.
#[derive(Clone, Copy)]
struct SegmentFrame {
    p0: Vec2,
    axis: Vec2,
    length: f64,
    scale: f64,
}

impl SegmentFrame {
    fn new(line: &FiniteLineCharge, k: f64) -> Self {
        let d = line.p1 - line.p0;
        let length = d.norm();
        Self {
            p0: line.p0,
            axis: d * (1.0 / length),
            length,
            scale: k * line.lambda,
        }
    }

    #[inline]
    fn potential(&self, p: Vec2) -> Result<f64, ChargeError> {
        let rel = self.p0 - p;
        let s0 = rel.dot(self.axis);
        let s1 = s0 + self.length;
        let d = rel.cross(self.axis).abs();
        Ok(self.scale * log_ratio(s0, s1, d)?)
    }
}

/// ln((s1 + √(s1²+d²)) / (s0 + √(s0²+d²))) for signed axial endpoint
/// coordinates s0 < s1 relative to the perpendicular foot.
#[inline]
fn log_ratio(s0: f64, s1: f64, d: f64) -> Result<f64, ChargeError> {
    if d <= SINGULAR_DISTANCE * (1.0 + s0.abs() + s1.abs()) {
        return if s0 > 0.0 {
            Ok((s1 / s0).ln())
        } else if s1 < 0.0 {
            Ok((s0 / s1).ln())
        } else {
            Err(ChargeError::SingularPotential)
        };
    }
    let d2 = d * d;
    let r0 = (s0 * s0 + d2).sqrt();
    let r1 = (s1 * s1 + d2).sqrt();
    if s0 >= 0.0 {
        Ok(((s1 + r1) / (s0 + r0)).ln())
    } else if s1 <= 0.0 {
        Ok(((r0 - s0) / (r1 - s1)).ln())
    } else {
        Ok(((s1 + r1) * (r0 - s0) / d2).ln())
    }
}

/// Closed-form potential of a finite line charge in axial coordinates:
/// `a` is the distance from the perpendicular foot toward `p0`, `b` toward `p1`,
/// `d` the perpendicular distance.
pub fn finite_line_potential_coords(
    a: f64,
    b: f64,
    d: f64,
    lambda: f64,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(k.k * lambda * log_ratio(-a, b, d)?)
}

/// Potential at `p` of a finite line charge.
pub fn potential_finite_line(
    p: Vec2,
    line: &FiniteLineCharge,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    if line.lambda == 0.0 {
        return Ok(0.0);
    }
    SegmentFrame::new(line, k.k).potential(p)
}

/// Potential at `p` of an infinite line charge, zero at distance `d0`.
pub fn potential_infinite_line(
    p: Vec2,
    line: &InfiniteLineCharge,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    let d = line.signed_offset(p).abs();
    if d <= SINGULAR_DISTANCE {
        return Err(ChargeError::SingularPotential);
    }
    Ok(2.0 * k.k * line.lambda * (line.d0 / d).ln())
}

/// Energy of `tgt` in the field of `src`, integrating the closed-form source
/// potential along `tgt`.
pub fn energy_segment_segment(
    src: &FiniteLineCharge,
    tgt: &FiniteLineCharge,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    if src.lambda == 0.0 || tgt.lambda == 0.0 {
        return Ok(0.0);
    }
    if segments_intersect(src.p0, src.p1, tgt.p0, tgt.p1) {
        return Err(ChargeError::InfiniteEnergy);
    }
    let frame = SegmentFrame::new(src, k.k);
    let span = tgt.p1 - tgt.p0;
    let mut acc = 0.0;
    for &(t, w) in segment_rule().pairs() {
        let v = frame
            .potential(tgt.p0 + span * t)
            .map_err(|_| ChargeError::InfiniteEnergy)?;
        acc += w * v;
    }
    Ok(acc * tgt.lambda * span.norm())
}

/// Energy of a finite segment in the field of an infinite line charge, in
/// closed form.
pub fn energy_segment_infinite(
    src: &InfiniteLineCharge,
    tgt: &FiniteLineCharge,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    let o0 = src.signed_offset(tgt.p0);
    let o1 = src.signed_offset(tgt.p1);
    if o0 * o1 <= 0.0 {
        return Err(ChargeError::InfiniteEnergy);
    }
    let len = tgt.length();
    let (d_start, d_end) = (o0.abs(), o1.abs());
    let sin_theta = (d_end - d_start) / len;
    Ok(segment_infinite_closed_form(
        2.0 * k.k * src.lambda * tgt.lambda,
        len,
        d_start,
        sin_theta,
        src.d0,
    ))
}

/// C·∫₀ᴸ ln(D0 / (d0 + x·sinθ)) dx in closed form.
///
/// The textbook antiderivative `L + ln(D0/(d0+L s))(L + d0/s) − ln(D0/d0) d0/s`
/// is rearranged to `L + L ln(D0/(d0+L s)) − (d0/s) ln(1 + L s/d0)`, which is
/// algebraically identical and stays accurate as s → 0.
pub fn segment_infinite_closed_form(
    c: f64,
    len: f64,
    d_start: f64,
    sin_theta: f64,
    zero_dist: f64,
) -> f64 {
    if sin_theta.abs() < PARALLEL_EPS {
        return c * len * (zero_dist / d_start).ln();
    }
    let d_end = d_start + len * sin_theta;
    c * (len + len * (zero_dist / d_end).ln()
        - (d_start / sin_theta) * (len * sin_theta / d_start).ln_1p())
}

pub fn energy_point_finite(
    q: &PointCharge,
    line: &FiniteLineCharge,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    if q.q == 0.0 {
        return Ok(0.0);
    }
    potential_finite_line(q.position, line, k)
        .map(|v| q.q * v)
        .map_err(|_| ChargeError::InfiniteEnergy)
}

pub fn energy_point_infinite(
    q: &PointCharge,
    line: &InfiniteLineCharge,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    if q.q == 0.0 {
        return Ok(0.0);
    }
    potential_infinite_line(q.position, line, k)
        .map(|v| q.q * v)
        .map_err(|_| ChargeError::InfiniteEnergy)
}

/// Per-term split of the system energy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyTerms {
    /// Ego segments against every obstacle and road charge (weighted).
    pub body: f64,
    /// Ego point charges against every obstacle and road charge (weighted).
    pub point: f64,
    /// Number of intersecting charge pairs or overlapping bodies.
    pub singular: usize,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.body + self.point + self.singular as f64 * SENTINEL_ENERGY
    }

    pub fn is_singular(&self) -> bool {
        self.singular > 0
    }
}

fn accumulate(value: Result<f64, ChargeError>, weight: f64, term: &mut f64, singular: &mut usize) {
    match value {
        Ok(v) => *term += weight * v,
        Err(_) => *singular += 1,
    }
}

/// Energy terms of `ego` placed among `obstacles` and `road`. Interactions
/// between obstacles are excluded since they do not depend on the ego.
pub fn system_energy_terms(
    ego: &ChargedBody,
    obstacles: &[ChargedBody],
    road: &RoadCharges,
    k: FieldConstants,
) -> EnergyTerms {
    let mut terms = EnergyTerms::default();
    let ego_vertices = ego.vertices();

    for obstacle in obstacles {
        let w = obstacle.weight;
        let before = terms.singular;
        for src in &obstacle.segments {
            for tgt in &ego.segments {
                accumulate(
                    energy_segment_segment(src, tgt, k),
                    w,
                    &mut terms.body,
                    &mut terms.singular,
                );
            }
            for pc in &ego.point_charges {
                accumulate(
                    energy_point_finite(pc, src, k),
                    w,
                    &mut terms.point,
                    &mut terms.singular,
                );
            }
        }
        if terms.singular == before {
            let obstacle_vertices = obstacle.vertices();
            if point_in_polygon(ego_vertices[0], &obstacle_vertices)
                || point_in_polygon(obstacle_vertices[0], &ego_vertices)
            {
                terms.singular += 1;
            }
        }
    }

    let w = road.weight;
    for wall in &road.infinite {
        for tgt in &ego.segments {
            accumulate(
                energy_segment_infinite(wall, tgt, k),
                w,
                &mut terms.body,
                &mut terms.singular,
            );
        }
        for pc in &ego.point_charges {
            accumulate(
                energy_point_infinite(pc, wall, k),
                w,
                &mut terms.point,
                &mut terms.singular,
            );
        }
    }
    for wall in &road.finite {
        for tgt in &ego.segments {
            accumulate(
                energy_segment_segment(wall, tgt, k),
                w,
                &mut terms.body,
                &mut terms.singular,
            );
        }
        for pc in &ego.point_charges {
            accumulate(
                energy_point_finite(pc, wall, k),
                w,
                &mut terms.point,
                &mut terms.singular,
            );
        }
    }
    terms
}

/// Total potential energy of the system; singular sub-terms contribute
/// [`SENTINEL_ENERGY`] each.
pub fn system_energy(
    ego: &ChargedBody,
    obstacles: &[ChargedBody],
    road: &RoadCharges,
    k: FieldConstants,
) -> f64 {
    system_energy_terms(ego, obstacles, road, k).total()
}

/// Weighted potential at `p` from every obstacle and road charge.
pub fn field_potential(
    p: Vec2,
    obstacles: &[ChargedBody],
    road: &RoadCharges,
    k: FieldConstants,
) -> Result<f64, ChargeError> {
    let mut v = 0.0;
    for obstacle in obstacles {
        for seg in &obstacle.segments {
            v += obstacle.weight * potential_finite_line(p, seg, k)?;
        }
    }
    for wall in &road.infinite {
        v += road.weight * potential_infinite_line(p, wall, k)?;
    }
    for wall in &road.finite {
        v += road.weight * potential_finite_line(p, wall, k)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;

    const K1: FieldConstants = FieldConstants { k: 1.0 };

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> FiniteLineCharge {
        FiniteLineCharge::new(Vec2::new(x0, y0), Vec2::new(x1, y1), 1.0).unwrap()
    }

    #[test]
    fn zero_density_potential_is_zero() {
        let mut l = seg(0.0, 0.0, 1.0, 0.0);
        l.lambda = 0.0;
        assert_eq!(
            potential_finite_line(Vec2::new(0.3, 0.0), &l, K1).unwrap(),
            0.0
        );
    }

    #[test]
    fn unit_configuration_matches_asinh() {
        // a = b = d = 1: 2·ln(1+√2)
        let l = seg(-1.0, 0.0, 1.0, 0.0);
        let v = potential_finite_line(Vec2::new(0.0, 1.0), &l, K1).unwrap();
        assert!((v - 2.0 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-14);
        let c = finite_line_potential_coords(1.0, 1.0, 1.0, 1.0, K1).unwrap();
        assert!((c - 1.762_747_174_039_086).abs() < 1e-12);
    }

    #[test]
    fn foot_outside_span_uses_signed_coordinates() {
        // P beyond p1: both axial coordinates negative
        let l = seg(0.0, 0.0, 1.0, 0.0);
        let p = Vec2::new(3.0, 0.5);
        let v = potential_finite_line(p, &l, K1).unwrap();
        let exact = (-2.0f64 / 0.5).asinh() - (-3.0f64 / 0.5).asinh();
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn on_line_outside_span_is_finite_and_inside_is_singular() {
        let l = seg(0.0, 0.0, 1.0, 0.0);
        let v = potential_finite_line(Vec2::new(2.0, 0.0), &l, K1).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-14);
        assert_eq!(
            potential_finite_line(Vec2::new(0.5, 0.0), &l, K1),
            Err(ChargeError::SingularPotential)
        );
    }

    #[test]
    fn infinite_line_values() {
        let l = InfiniteLineCharge::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0, 2.0);
        assert_eq!(
            potential_infinite_line(Vec2::new(5.0, 2.0), &l, K1).unwrap(),
            0.0
        );
        let v = potential_infinite_line(Vec2::new(0.0, -1.0), &l, K1).unwrap();
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(potential_infinite_line(Vec2::new(0.0, 3.0), &l, K1).unwrap() < 0.0);
        assert_eq!(
            potential_infinite_line(Vec2::new(7.0, 0.0), &l, K1),
            Err(ChargeError::SingularPotential)
        );
    }

    #[test]
    fn segment_infinite_parallel_and_perpendicular() {
        let wall =
            InfiniteLineCharge::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0, std::f64::consts::E);
        let parallel = seg(0.0, 1.0, 1.0, 1.0);
        assert!((energy_segment_infinite(&wall, &parallel, K1).unwrap() - 2.0).abs() < 1e-14);
        let perpendicular = seg(0.0, 1.0, 0.0, 2.0);
        let e = energy_segment_infinite(&wall, &perpendicular, K1).unwrap();
        assert!((e - 4.0 * (1.0 - 2f64.ln())).abs() < 1e-13);
        // same geometry approached from the other side of the line
        let below = seg(0.0, -2.0, 0.0, -1.0);
        let e2 = energy_segment_infinite(&wall, &below, K1).unwrap();
        assert!((e2 - e).abs() < 1e-13);
    }

    #[test]
    fn crossing_charges_are_infinite() {
        let wall = InfiniteLineCharge::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0, 3.0);
        assert_eq!(
            energy_segment_infinite(&wall, &seg(0.0, -1.0, 0.0, 1.0), K1),
            Err(ChargeError::InfiniteEnergy)
        );
        assert_eq!(
            energy_segment_segment(&seg(0.0, -1.0, 0.0, 1.0), &seg(-1.0, 0.0, 1.0, 0.0), K1),
            Err(ChargeError::InfiniteEnergy)
        );
    }

    #[test]
    fn point_energies_scale_with_charge() {
        let l = seg(-1.0, 0.0, 1.0, 0.0);
        let at = |q| {
            energy_point_finite(
                &PointCharge {
                    position: Vec2::new(0.0, 1.0),
                    q,
                },
                &l,
                K1,
            )
            .unwrap()
        };
        assert_eq!(at(0.0), 0.0);
        assert!((at(2.0) - 2.0 * at(1.0)).abs() < 1e-14);
        let wall = InfiniteLineCharge::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.0, 2.0);
        let e = energy_point_infinite(
            &PointCharge {
                position: Vec2::new(0.0, 1.0),
                q: 3.0,
            },
            &wall,
            K1,
        )
        .unwrap();
        assert!((e - 6.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn polygon_validation() {
        let bowtie = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(matches!(
            ChargedBody::polygon(&bowtie, 1.0, 1.0),
            Err(ChargeError::InvalidBody(_))
        ));
        let square = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(ChargedBody::polygon(&square, 1.0, 1.0).is_ok());
        assert!(ChargedBody::polygon(&square, 1.0, 0.0).is_err());
    }

    #[test]
    fn empty_world_has_zero_energy() {
        let ego = ChargedBody::rectangle(
            &OrientedRect::new(Pose::new(0.0, 0.0, 0.3), 4.5, 1.8),
            1.0,
            1.0,
        );
        assert_eq!(system_energy(&ego, &[], &RoadCharges::default(), K1), 0.0);
    }

    #[test]
    fn overlapping_bodies_hit_sentinel() {
        let ego = ChargedBody::rectangle(
            &OrientedRect::new(Pose::new(0.0, 0.0, 0.0), 4.5, 1.8),
            1.0,
            1.0,
        );
        let obs = ChargedBody::rectangle(
            &OrientedRect::new(Pose::new(1.0, 0.5, 0.2), 4.5, 1.8),
            1.0,
            1.0,
        );
        assert!(system_energy(&ego, &[obs], &RoadCharges::default(), K1) >= SENTINEL_ENERGY);
        // full containment without any edge crossing
        let small = ChargedBody::rectangle(
            &OrientedRect::new(Pose::new(0.0, 0.0, 0.0), 1.0, 0.5),
            1.0,
            1.0,
        );
        assert!(system_energy(&small, &[ego], &RoadCharges::default(), K1) >= SENTINEL_ENERGY);
    }
}
