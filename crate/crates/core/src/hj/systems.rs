use std::f64::consts::PI;

use super::{Axis, Dynamics, ValueGrid};
use crate::geometry::{
    boundary_distance, edges, point_in_polygon, polygon_boundary_distance, rect_signed_distance,
    segments_cross, OrientedRect, Pose, Vec2,
};
use crate::vehicle::{InputBounds, VehicleFootprint};

/// Grid of the relative subsystem `[x_rel, y_rel, ψ_ego, ψ_obs, u_ego, u_obs]`.
pub fn relative_axes() -> Vec<Axis> {
    vec![
        Axis::new(-15.0, 15.0, 21),
        Axis::new(-20.0, 20.0, 31),
        Axis::periodic(-PI, PI, 11),
        Axis::periodic(-PI, PI, 11),
        Axis::new(0.0, 25.0, 11),
        Axis::new(0.0, 25.0, 11),
    ]
}

/// Grid of the road subsystem `[x, y, ψ, u]`.
pub fn road_axes() -> Vec<Axis> {
    vec![
        Axis::new(-5.0, 25.0, 41),
        Axis::new(-5.0, 25.0, 41),
        Axis::periodic(-PI, PI, 21),
        Axis::new(0.0, 40.0, 41),
    ]
}

fn max_abs(lo: f64, hi: f64) -> f64 {
    lo.abs().max(hi.abs())
}

fn best(p: f64, lo: f64, hi: f64) -> f64 {
    (p * lo).max(p * hi)
}

fn worst(p: f64, lo: f64, hi: f64) -> f64 {
    (p * lo).min(p * hi)
}

/// Obstacle position relative to the ego in the global frame; the ego
/// maximizes, the obstacle's inputs act as the disturbance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeDynamics {
    pub ego: InputBounds,
    pub obstacle: InputBounds,
}

impl RelativeDynamics {
    pub fn flow(x: &[f64], ego: [f64; 2], obstacle: [f64; 2]) -> [f64; 6] {
        let (se, ce) = x[2].sin_cos();
        let (so, co) = x[3].sin_cos();
        [
            x[5] * co - x[4] * ce,
            x[5] * so - x[4] * se,
            ego[0],
            obstacle[0],
            ego[1],
            obstacle[1],
        ]
    }
}

impl Dynamics for RelativeDynamics {
    fn dim(&self) -> usize {
        6
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let (se, ce) = x[2].sin_cos();
        let (so, co) = x[3].sin_cos();
        let (e, o) = (&self.ego, &self.obstacle);
        p[0] * (x[5] * co - x[4] * ce)
            + p[1] * (x[5] * so - x[4] * se)
            + best(p[2], e.lo[0], e.hi[0])
            + worst(p[3], o.lo[0], o.hi[0])
            + best(p[4], e.lo[1], e.hi[1])
            + worst(p[5], o.lo[1], o.hi[1])
    }

    fn dissipation(&self, axes: &[Axis]) -> Vec<f64> {
        let speed = max_abs(axes[4].lo, axes[4].hi) + max_abs(axes[5].lo, axes[5].hi);
        vec![
            speed,
            speed,
            max_abs(self.ego.lo[0], self.ego.hi[0]),
            max_abs(self.obstacle.lo[0], self.obstacle.hi[0]),
            max_abs(self.ego.lo[1], self.ego.hi[1]),
            max_abs(self.obstacle.lo[1], self.obstacle.hi[1]),
        ]
    }
}

/// Ego unicycle against static road structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadDynamics {
    pub ego: InputBounds,
}

impl RoadDynamics {
    pub fn flow(x: &[f64], ego: [f64; 2]) -> [f64; 4] {
        let (s, c) = x[2].sin_cos();
        [x[3] * c, x[3] * s, ego[0], ego[1]]
    }
}

impl Dynamics for RoadDynamics {
    fn dim(&self) -> usize {
        4
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let (s, c) = x[2].sin_cos();
        let e = &self.ego;
        p[0] * x[3] * c
            + p[1] * x[3] * s
            + best(p[2], e.lo[0], e.hi[0])
            + best(p[3], e.lo[1], e.hi[1])
    }

    fn dissipation(&self, axes: &[Axis]) -> Vec<f64> {
        let speed = max_abs(axes[3].lo, axes[3].hi);
        vec![
            speed,
            speed,
            max_abs(self.ego.lo[0], self.ego.hi[0]),
            max_abs(self.ego.lo[1], self.ego.hi[1]),
        ]
    }
}

/// Signed distance of a vehicle rectangle to leaving a drivable region:
/// clearance when fully inside, minus the deepest violation otherwise.
pub fn road_signed_distance(rect: &OrientedRect, region: &[Vec2]) -> f64 {
    let corners = rect.corners();
    let mut violation: f64 = 0.0;
    let mut violated = false;
    for c in corners {
        if !point_in_polygon(c, region) {
            violated = true;
            violation = violation.max(boundary_distance(c, region));
        }
    }
    for &v in region {
        if rect.contains(v) {
            violated = true;
            violation = violation.max(rect.interior_depth(v));
        }
    }
    if violation > 0.0 {
        return -violation;
    }
    // corners on or inside the boundary: an edge crossing the boundary still
    // leaves part of the body outside, a mere touch is distance zero
    if edges(&corners).any(|(a0, a1)| edges(region).any(|(b0, b1)| segments_cross(a0, a1, b0, b1)))
    {
        -1e-9
    } else if violated {
        0.0
    } else {
        polygon_boundary_distance(&corners, region)
    }
}

/// Collision target of the relative subsystem: signed distance between the
/// ego footprint at the origin and the obstacle footprint at `(x_rel, y_rel)`.
pub fn relative_target(footprint: &VehicleFootprint, axes: Vec<Axis>) -> ValueGrid {
    let mut key = [f64::NAN; 4];
    let mut cached = 0.0;
    ValueGrid::from_fn(axes, 0.0, |x| {
        if x[..4] != key {
            key.copy_from_slice(&x[..4]);
            let ego = footprint.rect(Pose::new(0.0, 0.0, x[2]));
            let obs = footprint.rect(Pose::new(x[0], x[1], x[3]));
            cached = rect_signed_distance(&ego, &obs);
        }
        cached
    })
}

/// Road-violation target in the road grid frame; `origin` is the global
/// position of the grid's coordinate origin.
pub fn road_target(
    footprint: &VehicleFootprint,
    region: &[Vec2],
    origin: Vec2,
    axes: Vec<Axis>,
) -> ValueGrid {
    let local: Vec<Vec2> = region.iter().map(|&v| v - origin).collect();
    let mut key = [f64::NAN; 3];
    let mut cached = 0.0;
    ValueGrid::from_fn(axes, 0.0, |x| {
        if x[..3] != key {
            key.copy_from_slice(&x[..3]);
            cached = road_signed_distance(&footprint.rect(Pose::new(x[0], x[1], x[2])), &local);
        }
        cached
    })
}

/// One decomposed subsystem together with its target geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsystemSpec {
    Relative {
        ego: InputBounds,
        obstacle: InputBounds,
        footprint: VehicleFootprint,
    },
    Road {
        ego: InputBounds,
        footprint: VehicleFootprint,
        region: Vec<Vec2>,
        origin: Vec2,
    },
}

impl SubsystemSpec {
    pub fn axes(&self) -> Vec<Axis> {
        match self {
            SubsystemSpec::Relative { .. } => relative_axes(),
            SubsystemSpec::Road { .. } => road_axes(),
        }
    }

    /// Terminal value: signed distance to the target set.
    pub fn signed_distance_target(&self) -> ValueGrid {
        match self {
            SubsystemSpec::Relative { footprint, .. } => relative_target(footprint, self.axes()),
            SubsystemSpec::Road {
                footprint,
                region,
                origin,
                ..
            } => road_target(footprint, region, *origin, self.axes()),
        }
    }

    pub fn solve(&self, horizon: f64, tol: f64) -> Result<ValueGrid, super::HjError> {
        let target = self.signed_distance_target();
        match self {
            SubsystemSpec::Relative { ego, obstacle, .. } => super::solve_brs(
                &target,
                &RelativeDynamics {
                    ego: *ego,
                    obstacle: *obstacle,
                },
                horizon,
                tol,
            ),
            SubsystemSpec::Road { ego, .. } => {
                super::solve_brs(&target, &RoadDynamics { ego: *ego }, horizon, tol)
            }
        }
    }
}
