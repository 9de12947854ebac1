//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the library.
///
/// The split between [`Error::Domain`] and [`Error::Resource`] matters to the
/// CLI, which maps them to distinct exit codes: bad inputs are domain errors,
/// while inputs that are merely too large for an exact engine are resource
/// errors.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input (out-of-range index, malformed file, inconsistent sizes).
    #[error("domain error: {0}")]
    Domain(String),
    /// Input exceeds a brute-force size cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// The construction is valid but outside the supported fragment.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An iterative numeric routine failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Text format parse failure.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
