//! Error type shared by the library and the command-line frontend.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation. Carries the field name so the
    /// frontend can point at the offending key.
    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    /// A loss, gradient, or parameter went non-finite mid-run.
    #[error("numeric abort: {0}")]
    Numeric(String),

    /// Checkpoint file missing, unreadable, or from an incompatible version.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    /// Malformed row in a controller trace file. `line` is 1-based and counts
    /// the header.
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code the frontend should use for this error.
    /// Usage and I/O problems exit 2; numeric aborts exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
