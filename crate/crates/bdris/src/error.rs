//! Error taxonomy shared by the library and the CLI.
//!
//! Three categories matter operationally: validation failures (bad inputs or
//! configuration), numerical failures (singular or ill-conditioned Fisher
//! matrices, decomposition breakdowns), and I/O failures. The CLI maps them to
//! exit codes 1, 2 and 3 respectively.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input or configuration violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical procedure failed or its guard tripped.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Filesystem or serialization failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV emission failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON emission failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code the CLI uses for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            Error::Numerical(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
