use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The model description is malformed (bad rate, bad jump law, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// The model is well formed but its drift to +infinity cannot be certified.
    #[error("model rejected: {0}")]
    NotTransient(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A grid, region or probe window does not cover what the computation needs.
    #[error("coverage: {0}")]
    Coverage(String),
    #[error("not certifiable: {0}")]
    NotCertifiable(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
