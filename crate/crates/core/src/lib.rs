//! Line-charge potential fields as the cost of a sampled MPC for emergency
//! collision avoidance, a grid HJ-reachability baseline, a scenario suite and
//! a batch simulation harness.

pub mod charge;
pub mod ga;
pub mod geometry;
pub mod hj;
pub mod mpc;
pub mod quadrature;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod vehicle;
