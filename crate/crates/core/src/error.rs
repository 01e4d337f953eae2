use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error classes shared by every module.
///
/// The three variants line up with the CLI exit codes: usage errors are
/// caller mistakes (bad flags, violated preconditions), data errors come from
/// malformed inputs, and numeric errors signal a computation that cannot
/// produce a finite answer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Process exit code for this error class (1 usage, 2 data, 3 numeric).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Data(_) | Error::Io(_) => 2,
            Error::Numeric(_) => 3,
        }
    }
}
