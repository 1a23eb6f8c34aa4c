use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("insufficient sample size: {0}")]
    InsufficientSample(String),

    /// The plug-in variance is zero, so no studentized statistic exists.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("integer overflow while accumulating {0}")]
    Overflow(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
