use thiserror::Error;

/// Errors raised by the solvers, constructors and channel algebra.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input failed a type invariant (non-Hermitian matrix, bad mass, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A scalar parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Requested object would exceed the configured size cap.
    #[error("capacity exceeded: {requested} > {max}")]
    Capacity { requested: usize, max: usize },

    #[error("solver did not converge after {iterations} iterations (last gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
