use thiserror::Error;

/// Errors raised by the laboratory.
///
/// `Usage`, `Domain` and `Config` signal bad inputs; the remaining variants
/// are failed scientific checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-contraction: {0}")]
    NonContraction(String),
    #[error("left the invariant ball: {0}")]
    BallExit(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("geometry check failed: {0}")]
    Geometry(String),
    #[error("inconsistent critical point: {0}")]
    Inconsistency(String),
}

impl Error {
    /// True for errors caused by invalid input rather than a failed check.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::Domain(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
