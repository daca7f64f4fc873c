use thiserror::Error;

use crate::lowrank::FactoredRankR;
use crate::scalar::Real;

/// Errors raised by the recovery library.
#[derive(Debug, Error)]
pub enum Error<T: Real = f64> {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("truncated SVD did not converge after {iterations} Lanczos steps (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Box<FactoredRankR<T>>,
    },

    #[error("numerical breakdown at iteration {iteration}")]
    Numeric { iteration: usize },
}

impl<T: Real> Error<T> {
    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

pub type Result<V, T = f64> = std::result::Result<V, Error<T>>;
