//! Grid-based Hamilton-Jacobi reachability: value grids, a Lax-Friedrichs
//! solver for backward reachable sets, the relative and road subsystems, and
//! the min-composed control policy.

mod grid;
mod policy;
mod solver;
mod systems;

pub use grid::{Axis, ValueGrid};
pub use policy::{hj_control, HjCache, HjControl, HjPolicy, HjSettings};
pub use solver::{cfl_limit, hji_step, solve_brs, solve_brs_slices, Dynamics};
pub use systems::{
    relative_axes, relative_target, road_axes, road_signed_distance, road_target, RelativeDynamics,
    RoadDynamics, SubsystemSpec,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HjError {
    #[error("time step {dt} s exceeds the CFL limit {max_dt} s")]
    Cfl { dt: f64, max_dt: f64 },
    #[error("grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
