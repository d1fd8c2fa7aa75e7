use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid arguments (gcd violations, out-of-range parameters, broken invariants).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Requested window does not fit the available data.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Backwards iteration of a non-invertible map, or a point outside the domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An observable produced a negative or non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// A branch derivative vanishes inside its interval.
    #[error("singular branch: {0}")]
    Singularity(String),
    /// Power iteration did not converge.
    #[error("spectral error: {0}")]
    Spectral(String),
    /// Truncated coefficient series produced a clearly negative density.
    #[error("coefficient truncation: {0}")]
    Truncation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
