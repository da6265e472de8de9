use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("mask selects no target cells")]
    EmptyMask,
    #[error("bad sweep: {0}")]
    BadSweep(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ground-truth set is empty")]
    GtEmpty,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateInput(msg.into())
}
