use thiserror::Error;

/// Errors raised by the geometry, transport and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a precondition (index out of range, shape mismatch, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested geometric operation is undefined at this input.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A user-supplied function failed its construction-time checks.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An inner solve failed while assembling an outer cost matrix.
    #[error("pair ({row}, {col}): {source}")]
    Pair {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
