use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum Error {
    /// A monopole formula was evaluated at (or too close to) the origin.
    #[error("domain error: {what} at x = {at:?}")]
    Domain { what: &'static str, at: Vec3 },

    #[error("quaternion must have unit norm (got {norm})")]
    NotUnit { norm: f64 },

    #[error("imaginary unit requested from a vector of norm {norm}")]
    DegenerateDirection { norm: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("linear solve did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
