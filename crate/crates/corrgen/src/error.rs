//! Error taxonomy shared across the crate.
//!
//! Variants are grouped by exit-code class for the command-line front end:
//! validation problems (bad dimensions, out-of-domain arguments, invalid
//! state) map to exit code 1, numerical problems (iteration caps, starvation,
//! singular systems) to exit code 2, and I/O problems to exit code 3.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CorrError>;

/// Everything that can go wrong while building or auditing correlation
/// matrices.
#[derive(Debug, Error)]
pub enum CorrError {
    /// Shape mismatch: vector lengths, matrix dimensions, permutation size.
    #[error("dimension error: {0}")]
    DimensionError(String),

    /// Scalar argument outside its mathematical domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A matrix that must be positive definite is not; carries the offending
    /// smallest eigenvalue.
    #[error("matrix is not positive definite (lambda_min = {lambda_min:.6e})")]
    NotPositiveDefinite { lambda_min: f64 },

    /// A fixed-point or iterative routine hit its iteration cap.
    #[error("iteration limit reached after {iterations} steps (residual {residual:.3e})")]
    IterationLimit { iterations: usize, residual: f64 },

    /// A dense numerical step failed (non-convergence, singular system).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A rejection sampler exceeded its consecutive-rejection budget.
    #[error("sampling starvation after {attempts} consecutive rejections")]
    SamplingStarvation { attempts: u64 },

    /// The rejection baseline exhausted its validity budget.
    #[error("no valid matrix within {attempts} attempts")]
    ValidityStarvation { attempts: u64 },

    /// Operation invoked on an object in the wrong state.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Refused because the requested size exceeds a documented limit.
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),

    /// File or stream trouble; wraps the path for context.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorrError {
    /// Process exit code class for the CLI: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CorrError::DimensionError(_)
            | CorrError::DomainError(_)
            | CorrError::NotPositiveDefinite { .. }
            | CorrError::InvalidState(_)
            | CorrError::BoundExceeded(_) => 1,
            CorrError::IterationLimit { .. }
            | CorrError::NumericalFailure(_)
            | CorrError::SamplingStarvation { .. }
            | CorrError::ValidityStarvation { .. } => 2,
            CorrError::Io { .. } => 3,
        }
    }
}
