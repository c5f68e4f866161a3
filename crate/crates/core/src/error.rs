//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented domain (e.g. `m = 0`, a
    /// truncation level larger than the dimension, an empty grid).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value violates a structural contract (e.g. a ground-truth vector
    /// that is not unit norm).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// An operation that needs a direction received the zero vector.
    #[error("zero vector input")]
    ZeroVector,

    /// A projection collapsed numerically (input essentially orthogonal to
    /// the range).
    #[error("degenerate direction: projection of the input onto the range is numerically zero")]
    DegenerateDirection,

    /// A matrix-vector product vanished mid-iteration; the run is aborted.
    #[error("degenerate iterate at step {step}: matrix-vector product vanished")]
    DegenerateIterate { step: usize },

    /// Malformed config file, CSV, or binary payload.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
