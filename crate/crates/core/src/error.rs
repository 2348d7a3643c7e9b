use thiserror::Error;

use crate::ode_core::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The adaptive step collapsed below the configured minimum. The partial
    /// trajectory up to the failure radius is attached.
    #[error("integration failed at r = {radius:e}: step {step:e} below minimum")]
    IntegrationFailure {
        radius: f64,
        step: f64,
        partial: Box<Trajectory>,
    },

    /// No (undershoot, overshoot) amplitude pair could be located. For the
    /// original problem this is the signature of eps >= eps*.
    #[error("no shooting bracket found in amplitude range [{lo:e}, {hi:e}]: {reason}")]
    BracketNotFound { lo: f64, hi: f64, reason: String },

    #[error("divergent integral: |u|^{exponent} with algebraic tail r^-{power} in dimension {dim}")]
    Divergent { exponent: f64, power: f64, dim: u32 },

    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("not in asymptotic regime: total mass {total:e} <= target {target:e}")]
    NotAsymptotic { total: f64, target: f64 },

    #[error("ill-conditioned fit: abscissa spread {spread:.3} < 4")]
    IllConditionedFit { spread: f64 },

    #[error("sweep failed: only {succeeded} of {total} points converged (need at least 6)")]
    SweepFailed { succeeded: usize, total: usize },
}
