use thiserror::Error;

use crate::field::ScalarField;

/// Errors raised by the library. Numerical failures that carry a partial
/// result (a last Newton iterate) box it so the enum stays small.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at node {index} ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("negative value {value} at node {index} in a field required to be nonnegative")]
    Negative { index: usize, value: f64 },

    #[error("region exits the grid hull: {0}")]
    OutOfDomain(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:.3e}): {reason}")]
    Diverged {
        iterations: usize,
        residual: f64,
        reason: String,
        last: Option<Box<ScalarField>>,
    },

    #[error("continuation failed at arclength {arc_s:.6} (lambda {lambda:.6}): {reason}")]
    Continuation {
        arc_s: f64,
        lambda: f64,
        reason: String,
    },

    #[error("linear solver failure: {0}")]
    Linear(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::Continuation { .. } | Error::Linear(_) | Error::Internal(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
