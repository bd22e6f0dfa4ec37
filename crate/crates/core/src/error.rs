use thiserror::Error;

use crate::C64;

/// Errors raised by the numerical kernel and the model layers built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmError {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("root finding did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<C64>,
    },

    #[error("interpolation nodes {first} and {second} coincide")]
    DuplicateNodes { first: usize, second: usize },

    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("evaluation point z = {z} is a pole")]
    PoleAtZ { z: C64 },

    #[error("coupling has |g| = 0")]
    ZeroCoupling,

    #[error("sampling failed after {attempts} rejections")]
    SamplingFailed { attempts: usize },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("coefficient {index} has magnitude {magnitude:.3e}, expected zero (threshold {threshold:.3e})")]
    DivisibilityViolation {
        index: usize,
        magnitude: f64,
        threshold: f64,
    },

    #[error("particles collided at t = {time} (gap {gap:.3e})")]
    CollisionDetected { time: f64, gap: f64 },

    #[error("phase function evaluation failed: {0}")]
    EvaluationFailure(String),

    #[error("no sign convention satisfies the moment-map constraint (best residual {residual:.3e})")]
    ConstraintViolation { residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = CmError> = std::result::Result<T, E>;
