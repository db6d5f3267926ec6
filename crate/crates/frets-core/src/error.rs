//! Error type shared by every module in the crate.

use std::fmt;
use std::io;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Tensor shapes incompatible with the requested operation.
    Dimension(String),
    /// Invalid model, split or training configuration.
    Config(String),
    /// Malformed input data (CSV parsing, missing values).
    Ingestion(String),
    /// Training diverged or produced non-finite values.
    Training(String),
    /// Checkpoint file malformed or incompatible.
    Checkpoint(String),
    /// Underlying I/O failure.
    Io(io::Error),
    /// A verification suite found a property violation.
    Property(String),
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn ingestion(msg: impl Into<String>) -> Self {
        Error::Ingestion(msg.into())
    }

    /// Stable class name, used by the CLI to pick the process exit code.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Config(_) => "config",
            Error::Ingestion(_) => "ingestion",
            Error::Training(_) => "training",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Property(_) => "property",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Config(msg) => write!(f, "invalid config: {msg}"),
            Error::Ingestion(msg) => write!(f, "ingestion error: {msg}"),
            Error::Training(msg) => write!(f, "training error: {msg}"),
            Error::Checkpoint(msg) => write!(f, "checkpoint error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
            Error::Property(msg) => write!(f, "property violation: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}
