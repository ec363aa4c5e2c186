use std::path::PathBuf;

use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input at a 1-based line and column.
    #[error("{context}:{line}:{column}: {message}")]
    Parse {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{classes} classes cannot be split into {tasks} equal tasks")]
    NotDivisible { classes: usize, tasks: usize },

    #[error("sequence space has {omega} elements, above the enumeration cap of {cap}")]
    CapExceeded { omega: BigUint, cap: u64 },

    #[error("accuracy records do not cover the sequence space: {0}")]
    Coverage(String),

    #[error("no accuracy recorded for sequence {0}")]
    MissingAccuracy(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Short machine-readable tag, used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Invalid(_) => "invalid",
            Error::NotDivisible { .. } => "not_divisible",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::Coverage(_) => "coverage",
            Error::MissingAccuracy(_) => "missing_accuracy",
            Error::Degenerate(_) => "degenerate",
        }
    }
}
