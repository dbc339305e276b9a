//! Crate-wide error type.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum Error {
    /// Configuration file problem; the message names the offending key.
    Config(String),
    /// Dataset could not be loaded or is unusable.
    Dataset(String),
    /// Checkpoint file rejected (bad magic, checksum, or tensor mismatch).
    Checkpoint(String),
    /// Image file could not be read or decoded.
    Image(PathBuf, String),
    /// Training aborted (non-finite loss or parameters).
    Training(String),
    /// Metric is undefined for the given inputs (e.g. constant predictions).
    Degenerate(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Dataset(msg) => write!(f, "dataset error: {msg}"),
            Error::Checkpoint(msg) => write!(f, "checkpoint error: {msg}"),
            Error::Image(path, msg) => write!(f, "image error ({}): {msg}", path.display()),
            Error::Training(msg) => write!(f, "training error: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate metric: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
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

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
