//! Error types shared across the simulation and optimization layers.

use thiserror::Error;

/// Failure modes of simulation, optimization, and analysis routines.
#[derive(Debug, Error)]
pub enum SimError {
    /// A parameter set violates its documented invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The assembled per-step linear system is rank deficient, which signals
    /// a malformed parameter set (e.g. zero masses or lengths).
    #[error("dynamics system is singular (pivot magnitude {pivot:.3e} below threshold)")]
    SingularSystem { pivot: f64 },

    /// A state or cost became NaN/infinite during integration.
    #[error("state became non-finite at step {step}")]
    NonFinite { step: usize },

    /// The control Hessian could not be made positive definite at the given
    /// backward-pass step; the caller is expected to raise regularization.
    #[error("control Hessian not positive definite at step {step}")]
    NotPositiveDefinite { step: usize },

    /// A measurement window does not fit inside the trajectory.
    #[error("window [{start}, {end}] s outside trajectory duration {duration} s")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        duration: f64,
    },
}

/// Convenience alias used throughout the crate.
pub type SimResult<T> = Result<T, SimError>;
