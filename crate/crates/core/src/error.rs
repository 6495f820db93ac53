use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("watchdog exceeded after {rounds} rounds")]
    WatchdogExceeded { rounds: u64 },

    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("no certified seed map after {0} candidates")]
    Exhausted(u64),

    #[error("calibration diverged: {0}")]
    CalibrationDiverged(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
