//! Error types shared across the simulation crates.

use thiserror::Error;

/// Errors produced by signal construction, the sensing pipeline, the
/// detector, and the scenario harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's preconditions.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The input is structurally valid but statistically degenerate for the
    /// requested operation (e.g. zero-variance input to a correlator).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A configuration key is missing, unknown, or holds an invalid value.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// Filesystem failure, annotated with the path that caused it.
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
