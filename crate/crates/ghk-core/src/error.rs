//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid, norm and experiment operations.
#[derive(Debug, Error)]
pub enum GhkError {
    /// A parameter violated its contract (value reported in the message).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two grid functions that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A mathematically undefined request (zero function, empty range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The resource guard refused an evaluation.
    #[error("resource budget exceeded: estimated {estimated} slices > budget {budget}")]
    Budget { estimated: u128, budget: u128 },

    /// A sample lookup failed or the sample set cannot support the stencil.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// A linear fit is rank deficient.
    #[error("rank error: {0}")]
    Rank(String),

    /// File i/o failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file or config contents.
    #[error("parse error: {0}")]
    Parse(String),

    /// Internal invariant violation (indicates a bug).
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<serde_json::Error> for GhkError {
    fn from(e: serde_json::Error) -> Self {
        GhkError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GhkError>;
