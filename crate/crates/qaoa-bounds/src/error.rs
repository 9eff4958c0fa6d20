//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad graph data, inconsistent angles, out-of-range
    /// arguments, and similar caller mistakes.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well formed but exceeds what this implementation can
    /// compute (too many qubits, too deep a parameter regime, ...).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative routine failed to converge within its step budget.
    /// Carries the trailing objective values so the caller can inspect the
    /// stall.
    #[error("no convergence after {steps} steps (last objective values: {tail:?})")]
    Convergence { steps: usize, tail: Vec<f64> },

    /// An internal consistency check failed. Indicates a bug, not bad input.
    #[error("integrity check failed: {0}")]
    Integrity(String),

    /// A persisted file is missing, malformed, or fails its checksum.
    #[error("file format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
