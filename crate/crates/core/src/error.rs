use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A covariance block that must be invertible is numerically singular.
    #[error("singular model: {0}")]
    SingularModel(String),

    /// A proved bound or internal consistency check failed; indicates a
    /// solver or units bug, not bad input. Carries full diagnostics.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
