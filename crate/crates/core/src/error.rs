use alloc::string::String;

/// Failure modes shared by every module of the core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}
