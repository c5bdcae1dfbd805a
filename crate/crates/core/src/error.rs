use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("verification failed for {check}: {detail}")]
    Verification { check: String, detail: String },

    #[error("no records at sequence length {0}")]
    NotFound(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("enumeration too large: {0}")]
    SizeLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
