//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any flowalign-core operation.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad widths, non-positive hyperparameters, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Tensor/vector dimension mismatch.
    #[error("shape error in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Non-finite values or other numeric failures.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid input data (empty batches, wrong label kinds, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Malformed file contents (checkpoints, datasets, ledgers).
    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that two slices have the same length, naming the operand on failure.
pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Shape {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
