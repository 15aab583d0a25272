//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied parameter or configuration value.
    #[error("invalid parameter: {0}")]
    Param(String),
    /// A numerical routine failed to converge or left its domain.
    #[error("numerical failure: {0}")]
    Numerics(String),
    /// Requested operation is not defined for the given inputs.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
