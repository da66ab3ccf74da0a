//! Planar geometry shared by the charge field, collision checks and the HJ
//! target sets.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into [-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land exactly on -π for inputs that were +π multiples
    if w < -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Position and heading of a rigid body in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Vec2::new(x, y),
            heading,
        }
    }

    /// Maps a point given in the body frame (x forward, y left) to the global frame.
    pub fn to_world(&self, local: Vec2) -> Vec2 {
        self.position + local.rotate(self.heading)
    }

    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.position).rotate(-self.heading)
    }
}

/// Rectangle of a vehicle body centered on its pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub pose: Pose,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn new(pose: Pose, length: f64, width: f64) -> Self {
        Self {
            pose,
            half_length: 0.5 * length,
            half_width: 0.5 * width,
        }
    }

    /// Corners in counter-clockwise order: rear-right, front-right, front-left, rear-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let (hl, hw) = (self.half_length, self.half_width);
        [
            self.pose.to_world(Vec2::new(-hl, -hw)),
            self.pose.to_world(Vec2::new(hl, -hw)),
            self.pose.to_world(Vec2::new(hl, hw)),
            self.pose.to_world(Vec2::new(-hl, hw)),
        ]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let l = self.pose.to_local(p);
        l.x.abs() <= self.half_length && l.y.abs() <= self.half_width
    }

    /// Distance from an interior point to the boundary; negative outside.
    pub fn interior_depth(&self, p: Vec2) -> f64 {
        let l = self.pose.to_local(p);
        (self.half_length - l.x.abs()).min(self.half_width - l.y.abs())
    }
}

/// Result of a separating-axis overlap test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    /// Unit axis of minimum overlap, oriented from the first rectangle to the second.
    pub axis: Vec2,
    pub depth: f64,
}

fn project(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    corners
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let p = c.dot(axis);
            (lo.min(p), hi.max(p))
        })
}

/// Separating-axis test for two oriented rectangles. Touching counts as overlap.
pub fn sat_overlap(a: &OrientedRect, b: &OrientedRect) -> Option<Penetration> {
    let ca = a.corners();
    let cb = b.corners();
    let axes = [
        Vec2::from_angle(a.pose.heading),
        Vec2::from_angle(a.pose.heading).perp(),
        Vec2::from_angle(b.pose.heading),
        Vec2::from_angle(b.pose.heading).perp(),
    ];
    let mut best: Option<Penetration> = None;
    for axis in axes {
        let (alo, ahi) = project(&ca, axis);
        let (blo, bhi) = project(&cb, axis);
        if ahi < blo || bhi < alo {
            return None;
        }
        let depth = (ahi - blo).min(bhi - alo);
        if best.is_none_or(|p| depth < p.depth) {
            let towards_b = (b.pose.position - a.pose.position).dot(axis) >= 0.0;
            best = Some(Penetration {
                axis: if towards_b { axis } else { -axis },
                depth,
            });
        }
    }
    best
}

/// Closest distance between point `p` and segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn orientation(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True when the closed segments share at least one point.
pub fn segments_intersect(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = orientation(b0, b1, a0);
    let d2 = orientation(b0, b1, a1);
    let d3 = orientation(a0, a1, b0);
    let d4 = orientation(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a0, b0, b1))
        || (d2 == 0.0 && on_segment(a1, b0, b1))
        || (d3 == 0.0 && on_segment(b0, a0, a1))
        || (d4 == 0.0 && on_segment(b1, a0, a1))
}

/// True when the segments cross at a point interior to both.
pub fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = orientation(b0, b1, a0);
    let d2 = orientation(b0, b1, a1);
    let d3 = orientation(a0, a1, b0);
    let d4 = orientation(a0, a1, b1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

pub fn segment_segment_distance(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Even-odd ray casting containment test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (poly[i], poly[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x_cross = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Iterator over the closed edges of a polygon.
pub fn edges(poly: &[Vec2]) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance(p: Vec2, poly: &[Vec2]) -> f64 {
    edges(poly)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum distance between two polygon boundaries; zero when they cross.
pub fn polygon_boundary_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for (a0, a1) in edges(a) {
        for (b0, b1) in edges(b) {
            best = best.min(segment_segment_distance(a0, a1, b0, b1));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

/// True when two simple polygons share any area or boundary point.
pub fn polygons_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    polygon_boundary_distance(a, b) == 0.0 || point_in_polygon(a[0], b) || point_in_polygon(b[0], a)
}

/// Separation between two oriented rectangles (zero when they touch or overlap).
pub fn rect_distance(a: &OrientedRect, b: &OrientedRect) -> f64 {
    if sat_overlap(a, b).is_some() {
        return 0.0;
    }
    polygon_boundary_distance(&a.corners(), &b.corners())
}

/// Signed distance between two rectangles: separation when apart, minus the
/// minimum translation depth when overlapping.
pub fn rect_signed_distance(a: &OrientedRect, b: &OrientedRect) -> f64 {
    match sat_overlap(a, b) {
        Some(p) => -p.depth,
        None => polygon_boundary_distance(&a.corners(), &b.corners()),
    }
}

/// Clips a convex polygon (counter-clockwise) against a convex clipper (counter-clockwise).
pub fn clip_convex(subject: &[Vec2], clipper: &[Vec2]) -> Vec<Vec2> {
    let mut output: Vec<Vec2> = subject.to_vec();
    for (c0, c1) in edges(clipper) {
        if output.is_empty() {
            break;
        }
        let input = std::mem::take(&mut output);
        let inside = |p: Vec2| orientation(c0, c1, p) >= 0.0;
        let intersect = |p: Vec2, q: Vec2| {
            let dp = orientation(c0, c1, p);
            let dq = orientation(c0, c1, q);
            p + (q - p) * (dp / (dp - dq))
        };
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(intersect(prev, cur)),
                (false, true) => {
                    output.push(intersect(prev, cur));
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    output
}

/// Minimum distance from an interior point to the edges of a convex
/// counter-clockwise polygon; negative outside.
pub fn convex_interior_depth(p: Vec2, poly: &[Vec2]) -> f64 {
    edges(poly)
        .map(|(a, b)| (b - a).cross(p - a) / (b - a).norm())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(cx: f64, cy: f64) -> OrientedRect {
        OrientedRect::new(Pose::new(cx, cy, 0.0), 1.0, 1.0)
    }

    #[test]
    fn touching_is_not_crossing() {
        let (a0, a1) = (Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        assert!(segments_cross(
            a0,
            a1,
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0)
        ));
        // T-junction and collinear overlap touch without crossing
        assert!(!segments_cross(
            a0,
            a1,
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0)
        ));
        assert!(segments_intersect(
            a0,
            a1,
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0)
        ));
        assert!(!segments_cross(
            a0,
            a1,
            Vec2::new(1.0, 0.0),
            Vec2::new(3.0, 0.0)
        ));
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..=20 {
            let a = 0.37 * k as f64;
            let w = wrap_angle(a);
            assert!((-PI..=PI).contains(&w));
            assert!((w.cos() - a.cos()).abs() < 1e-12);
            assert!((w.sin() - a.sin()).abs() < 1e-12);
        }
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), -PI);
    }

    #[test]
    fn unit_squares_apart_and_overlapping() {
        assert!(sat_overlap(&unit_square(0.0, 0.0), &unit_square(2.0, 0.0)).is_none());
        let p = sat_overlap(&unit_square(0.0, 0.0), &unit_square(0.9, 0.0)).unwrap();
        assert!((p.depth - 0.1).abs() < 1e-12);
        assert!((p.axis.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rect_distance_matches_gap() {
        let d = rect_distance(&unit_square(0.0, 0.0), &unit_square(3.0, 0.0));
        assert!((d - 2.0).abs() < 1e-12);
        let sd = rect_signed_distance(&unit_square(0.0, 0.0), &unit_square(0.5, 0.0));
        assert!((sd + 0.5).abs() < 1e-12);
    }

    #[test]
    fn segment_intersection_cases() {
        let o = Vec2::ZERO;
        assert!(segments_intersect(
            o,
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
            Vec2::new(2.0, 0.0)
        ));
        assert!(!segments_intersect(
            o,
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0)
        ));
        // touching at an endpoint
        assert!(segments_intersect(
            o,
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0)
        ));
        // collinear overlap
        assert!(segments_intersect(
            o,
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(3.0, 0.0)
        ));
    }

    #[test]
    fn polygon_containment() {
        let l_shape = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        assert!(point_in_polygon(Vec2::new(0.5, 1.5), &l_shape));
        assert!(!point_in_polygon(Vec2::new(1.5, 1.5), &l_shape));
    }

    #[test]
    fn clip_overlap_region() {
        let a = unit_square(0.0, 0.0).corners();
        let b = unit_square(0.5, 0.5).corners();
        let region = clip_convex(&a, &b);
        let area: f64 = edges(&region).map(|(p, q)| p.cross(q)).sum::<f64>() * 0.5;
        assert!((area - 0.25).abs() < 1e-12);
    }
}
