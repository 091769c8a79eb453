//! Simulation and gait-synthesis toolkit for a planar n-link snake robot.
//!
//! The crate builds up from a Newton-Euler chain dynamics model with
//! pluggable environment reaction forces (dry friction, viscous friction,
//! fluid drag with added mass) to an iLQR trajectory optimizer driven in a
//! receding-horizon loop, plus a serpenoid-curve baseline with grid search
//! and Pareto-front extraction, and gait analysis utilities (speed/power
//! metrics, per-joint spectra, model-error robustness runs).
//!
//! All numerics are generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the common `f64` choice.

// Validation code writes `!(x > zero)` on purpose: unlike `x <= zero`, the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod cost;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod ilqr;
pub mod model;
pub mod mpc;
pub mod scalar;
pub mod types;

pub use error::{SimError, SimResult};
pub use scalar::{real, Real};

/// `f64` instantiations of the core domain types.
pub type SnakeParams64 = types::SnakeParams<f64>;
pub type SnakeState64 = types::SnakeState<f64>;
pub type ControlVector64 = types::ControlVector<f64>;
pub type Trajectory64 = types::Trajectory<f64>;
pub type EnvironmentModel64 = env::EnvironmentModel<f64>;
pub type CostSpec64 = cost::CostSpec<f64>;
pub type IlqrConfig64 = ilqr::IlqrConfig<f64>;
pub type MpcConfig64 = mpc::MpcConfig<f64>;
pub type SerpenoidParams64 = baseline::SerpenoidParams<f64>;
pub type GridSpec64 = baseline::GridSpec<f64>;
