use thiserror::Error;

/// Errors raised by set oracles, cone algebra and the certificate estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge (residual {residual:.3e})")]
    NotConverged { what: String, residual: f64 },

    #[error("point is not in the set (distance {distance:.3e})")]
    NotInSet { distance: f64 },

    #[error("the set is empty: {0}")]
    EmptySet(String),

    #[error("Jacobian is not surjective (sigma_min = {sigma_min:.3e})")]
    NotSurjective { sigma_min: f64 },

    #[error("dimension {dim} exceeds the supported limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
