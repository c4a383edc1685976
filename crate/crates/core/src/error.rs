use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters that can never describe a valid ensemble or scenario.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("zero-entropy input: the series is constant")]
    ZeroEntropy,
    #[error("{test}: sequence too short ({got} bits, need at least {min})")]
    TooShort { test: &'static str, got: usize, min: usize },
    #[error("no clean channel: every tap was flagged as RIS-contaminated")]
    NoCleanChannel,
    #[error("objective is not finite")]
    NonFinite,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<S: Into<String>>(msg: S) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn invalid<S: Into<String>>(msg: S) -> Error {
    Error::Invalid(msg.into())
}
