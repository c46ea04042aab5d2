use perpetual_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model rejected: {0}")]
    Model(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DriverError {
    /// Process exit status. Assertion failures are not errors: they come
    /// back in the run summary and map to 4 there.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Config(_) => 2,
            DriverError::Model(_) => 3,
            DriverError::Core(CoreError::InvalidModel(_) | CoreError::NotTransient(_)) => 3,
            DriverError::Core(_) | DriverError::Io(_) => 1,
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> DriverError {
    DriverError::Config(msg.into())
}
