//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum NtcError {
    /// A caller passed inconsistent shapes, channel counts or values.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A computation produced a non-finite or otherwise invalid value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A bitstream or container failed to parse or ended prematurely.
    #[error("corrupt input: {0}")]
    Corrupt(String),

    /// A configuration value is out of range or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// An API was used out of sequence (e.g. a stale backward tape).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, NtcError>;

impl NtcError {
    /// Process exit code for the CLI: 0 ok, 2 usage, 3 corrupt input,
    /// 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            NtcError::Corrupt(_) => 3,
            NtcError::Numeric(_) => 4,
            NtcError::Io(_) | NtcError::Image(_) => 3,
            NtcError::Parameter(_) | NtcError::Config(_) | NtcError::Usage(_) => 2,
        }
    }
}
