//! Unicycle and dynamic bicycle models with forward-Euler stepping.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, OrientedRect, Pose, Vec2};

/// Lowest longitudinal speed at which the linear tire model is evaluated.
pub const U_EPS: f64 = 0.5;

const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum VehicleError {
    #[error("longitudinal speed {u} m/s is below the tire-model floor {U_EPS} m/s")]
    LowSpeedDomain { u: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnicycleState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnicycleInput {
    /// Turning rate (rad/s).
    pub r: f64,
    /// Acceleration (m/s²).
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BicycleState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    /// Body-frame longitudinal speed.
    pub u: f64,
    /// Body-frame lateral speed.
    pub v: f64,
    /// Yaw rate.
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BicycleInput {
    /// Total longitudinal tire force (N).
    pub fx: f64,
    /// Front steering angle (rad).
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicycleParams {
    pub m: f64,
    pub iz: f64,
    pub lf: f64,
    pub lr: f64,
    pub cf: f64,
    pub cr: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self {
            m: 1500.0,
            iz: 2500.0,
            lf: 1.2,
            lr: 1.6,
            cf: 80_000.0,
            cr: 80_000.0,
        }
    }
}

pub fn unicycle_derivative(s: &UnicycleState, input: &UnicycleInput) -> [f64; 4] {
    [s.u * s.psi.cos(), s.u * s.psi.sin(), input.r, input.a]
}

/// Front and rear lateral tire forces of the linear tire model.
pub fn lateral_tire_forces(
    s: &BicycleState,
    input: &BicycleInput,
    p: &BicycleParams,
) -> Result<(f64, f64), VehicleError> {
    if !(s.u >= U_EPS) {
        return Err(VehicleError::LowSpeedDomain { u: s.u });
    }
    let fyf = p.cf * (input.delta - (s.v + p.lf * s.r) / s.u);
    let fyr = p.cr * (-(s.v - p.lr * s.r) / s.u);
    Ok((fyf, fyr))
}

pub fn bicycle_derivative(
    s: &BicycleState,
    input: &BicycleInput,
    p: &BicycleParams,
) -> Result<[f64; 6], VehicleError> {
    let (fyf, fyr) = lateral_tire_forces(s, input, p)?;
    let (sin, cos) = s.psi.sin_cos();
    Ok([
        s.u * cos - s.v * sin,
        s.v * cos + s.u * sin,
        s.r,
        input.fx / p.m + s.v * s.r,
        (fyf + fyr) / p.m - s.u * s.r,
        (p.lf * fyf - p.lr * fyr) / p.iz,
    ])
}

/// One forward-Euler step. Speed is kept non-negative and heading wrapped.
pub fn step_unicycle(s: &UnicycleState, input: &UnicycleInput, dt: f64) -> UnicycleState {
    let d = unicycle_derivative(s, input);
    UnicycleState {
        x: s.x + d[0] * dt,
        y: s.y + d[1] * dt,
        psi: wrap_angle(s.psi + d[2] * dt),
        u: (s.u + d[3] * dt).max(0.0),
    }
}

/// One forward-Euler step of the bicycle model.
pub fn step_bicycle(
    s: &BicycleState,
    input: &BicycleInput,
    p: &BicycleParams,
    dt: f64,
) -> Result<BicycleState, VehicleError> {
    let d = bicycle_derivative(s, input, p)?;
    Ok(BicycleState {
        x: s.x + d[0] * dt,
        y: s.y + d[1] * dt,
        psi: wrap_angle(s.psi + d[2] * dt),
        u: s.u + d[3] * dt,
        v: s.v + d[4] * dt,
        r: s.r + d[5] * dt,
    })
}

/// Channel pair fed to either model: `[r, a]` for the unicycle, `[fx, delta]`
/// for the bicycle.
pub type Control = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputBounds {
    pub lo: Control,
    pub hi: Control,
}

impl InputBounds {
    pub fn clip(&self, c: Control) -> Control {
        [
            c[0].clamp(self.lo[0], self.hi[0]),
            c[1].clamp(self.lo[1], self.hi[1]),
        ]
    }

    pub fn contains(&self, c: Control) -> bool {
        (0..2).all(|i| c[i] >= self.lo[i] && c[i] <= self.hi[i])
    }

    pub fn span(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VehicleModel {
    Unicycle,
    Bicycle(BicycleParams),
}

impl VehicleModel {
    pub fn name(&self) -> &'static str {
        match self {
            VehicleModel::Unicycle => "unicycle",
            VehicleModel::Bicycle(_) => "bicycle",
        }
    }

    pub fn default_bounds(&self) -> InputBounds {
        match self {
            VehicleModel::Unicycle => InputBounds {
                lo: [-FRAC_PI_2, -8.0],
                hi: [FRAC_PI_2, 3.0],
            },
            VehicleModel::Bicycle(p) => {
                let f = 0.8 * p.m * GRAVITY;
                InputBounds {
                    lo: [-f, -0.5],
                    hi: [f, 0.5],
                }
            }
        }
    }

    /// Index of the channel that turns the vehicle.
    pub fn steer_channel(&self) -> usize {
        match self {
            VehicleModel::Unicycle => 0,
            VehicleModel::Bicycle(_) => 1,
        }
    }

    /// Index of the channel that accelerates the vehicle.
    pub fn throttle_channel(&self) -> usize {
        1 - self.steer_channel()
    }

    /// Initial state moving at `speed` along `pose`.
    pub fn initial_state(&self, pose: Pose, speed: f64) -> VehicleState {
        match self {
            VehicleModel::Unicycle => VehicleState::Unicycle(UnicycleState {
                x: pose.position.x,
                y: pose.position.y,
                psi: pose.heading,
                u: speed,
            }),
            VehicleModel::Bicycle(_) => VehicleState::Bicycle(BicycleState {
                x: pose.position.x,
                y: pose.position.y,
                psi: pose.heading,
                u: speed.max(U_EPS),
                v: 0.0,
                r: 0.0,
            }),
        }
    }

    /// One Euler step that never fails: the bicycle speed is clamped to
    /// [`U_EPS`] before and after the step.
    pub fn step(&self, s: &VehicleState, c: Control, dt: f64) -> VehicleState {
        match (self, s) {
            (VehicleModel::Unicycle, VehicleState::Unicycle(s)) => {
                VehicleState::Unicycle(step_unicycle(s, &UnicycleInput { r: c[0], a: c[1] }, dt))
            }
            (VehicleModel::Bicycle(p), VehicleState::Bicycle(s)) => {
                let mut s = *s;
                s.u = s.u.max(U_EPS);
                let mut next = step_bicycle(
                    &s,
                    &BicycleInput {
                        fx: c[0],
                        delta: c[1],
                    },
                    p,
                    dt,
                )
                .expect("speed clamped above the tire-model floor");
                next.u = next.u.max(U_EPS);
                VehicleState::Bicycle(next)
            }
            _ => panic!("vehicle state does not match the model"),
        }
    }

    /// Advances over `period` with `substeps` equal Euler steps.
    pub fn integrate(
        &self,
        s: &VehicleState,
        c: Control,
        period: f64,
        substeps: usize,
    ) -> VehicleState {
        let dt = period / substeps as f64;
        (0..substeps).fold(*s, |acc, _| self.step(&acc, c, dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VehicleState {
    Unicycle(UnicycleState),
    Bicycle(BicycleState),
}

impl VehicleState {
    pub fn pose(&self) -> Pose {
        match self {
            VehicleState::Unicycle(s) => Pose::new(s.x, s.y, s.psi),
            VehicleState::Bicycle(s) => Pose::new(s.x, s.y, s.psi),
        }
    }

    /// Longitudinal speed.
    pub fn speed(&self) -> f64 {
        match self {
            VehicleState::Unicycle(s) => s.u,
            VehicleState::Bicycle(s) => s.u,
        }
    }

    /// Ground-frame velocity vector.
    pub fn velocity(&self) -> Vec2 {
        match self {
            VehicleState::Unicycle(s) => Vec2::from_angle(s.psi) * s.u,
            VehicleState::Bicycle(s) => {
                Vec2::from_angle(s.psi) * s.u + Vec2::from_angle(s.psi).perp() * s.v
            }
        }
    }

    /// State components in declaration order.
    pub fn components(&self) -> Vec<f64> {
        match self {
            VehicleState::Unicycle(s) => vec![s.x, s.y, s.psi, s.u],
            VehicleState::Bicycle(s) => vec![s.x, s.y, s.psi, s.u, s.v, s.r],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleFootprint {
    pub length: f64,
    pub width: f64,
    /// Driver seat in the body frame (forward, left) relative to the centre.
    pub driver_offset: Vec2,
}

impl Default for VehicleFootprint {
    fn default() -> Self {
        Self {
            length: 4.5,
            width: 1.8,
            driver_offset: Vec2::new(0.8, 0.35),
        }
    }
}

impl VehicleFootprint {
    pub fn rect(&self, pose: Pose) -> OrientedRect {
        OrientedRect::new(pose, self.length, self.width)
    }

    pub fn driver_point(&self, pose: Pose) -> Vec2 {
        pose.to_world(self.driver_offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unicycle_straight_and_aligned() {
        let s = UnicycleState {
            x: 0.0,
            y: 0.0,
            psi: 0.0,
            u: 10.0,
        };
        assert_eq!(
            unicycle_derivative(&s, &UnicycleInput::default()),
            [10.0, 0.0, 0.0, 0.0]
        );
        let s = UnicycleState {
            psi: FRAC_PI_2,
            u: 5.0,
            ..s
        };
        let d = unicycle_derivative(&s, &UnicycleInput::default());
        assert!(d[0].abs() < 1e-15 && (d[1] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn unicycle_hand_euler() {
        let s = UnicycleState {
            x: 1.0,
            y: 2.0,
            psi: 0.0,
            u: 10.0,
        };
        let n = step_unicycle(&s, &UnicycleInput { r: 0.0, a: 2.0 }, 0.1);
        assert!((n.x - 2.0).abs() < 1e-15);
        assert!((n.u - 10.2).abs() < 1e-12);
        assert_eq!(n.y, 2.0);
    }

    #[test]
    fn zero_flow_leaves_state() {
        let s = UnicycleState {
            x: 3.0,
            y: -1.0,
            psi: 0.4,
            u: 0.0,
        };
        assert_eq!(step_unicycle(&s, &UnicycleInput::default(), 0.05), s);
    }

    #[test]
    fn bicycle_straight_motion() {
        let p = BicycleParams::default();
        let s = BicycleState {
            u: 20.0,
            ..Default::default()
        };
        let d = bicycle_derivative(
            &s,
            &BicycleInput {
                fx: 3000.0,
                delta: 0.0,
            },
            &p,
        )
        .unwrap();
        assert_eq!(d[3], 2.0);
        assert_eq!(d[4], 0.0);
        assert_eq!(d[5], 0.0);
        let coast = bicycle_derivative(&s, &BicycleInput::default(), &p).unwrap();
        assert_eq!(coast[3], 0.0);
    }

    #[test]
    fn bicycle_low_speed_is_rejected() {
        let p = BicycleParams::default();
        let s = BicycleState {
            u: 0.2,
            ..Default::default()
        };
        assert_eq!(
            bicycle_derivative(&s, &BicycleInput::default(), &p),
            Err(VehicleError::LowSpeedDomain { u: 0.2 })
        );
        // the model-level step clamps instead
        let m = VehicleModel::Bicycle(p);
        let n = m.step(&VehicleState::Bicycle(s), [0.0, 0.1], 0.01);
        assert!(n.speed() >= U_EPS);
    }

    #[test]
    fn front_force_affine_in_steering() {
        let p = BicycleParams::default();
        let s = BicycleState {
            u: 15.0,
            v: 0.3,
            r: 0.1,
            ..Default::default()
        };
        let f = |d| {
            lateral_tire_forces(&s, &BicycleInput { fx: 0.0, delta: d }, &p)
                .unwrap()
                .0
        };
        assert!(((f(0.2) - f(0.1)) / 0.1 - p.cf).abs() < 1e-6);
    }

    #[test]
    fn default_bounds_contain_zero() {
        for m in [
            VehicleModel::Unicycle,
            VehicleModel::Bicycle(BicycleParams::default()),
        ] {
            assert!(m.default_bounds().contains([0.0, 0.0]));
        }
    }
}
