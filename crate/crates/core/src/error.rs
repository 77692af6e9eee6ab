//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// A vector or sequence had the wrong size.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },

    /// An output does not belong to the output space it was used with.
    #[error("invalid output: {0}")]
    InvalidOutput(String),

    /// Output-space enumeration would exceed the configured cap.
    #[error("output space has {size} elements, above the enumeration cap of {cap}")]
    Capacity { size: u128, cap: u64 },

    /// A caller broke an operation's contract (stale targets, bad index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numeric failure (non-finite values) during training.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Dataset validation failed; each entry is one violation.
    #[error("invalid dataset: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// A file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// An error that occurred inside a training iteration.
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// An error with surrounding context (e.g. which fold failed), keeping
    /// the underlying error class intact.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl Error {
    pub(crate) fn dimension(what: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            got,
        }
    }

    /// Wraps an error with the training iteration it occurred in.
    pub fn in_iteration(self, iteration: usize) -> Self {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// Wraps an error with a context prefix.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
