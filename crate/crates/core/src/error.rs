use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller supplied an argument outside its domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data cannot support the requested estimate.
    #[error("data error: {0}")]
    Data(String),

    /// The exhaustive oracle was asked for more groups than it can enumerate.
    #[error("capacity exceeded: {groups} groups requested, at most {max} supported")]
    Capacity { groups: usize, max: usize },

    /// Critical values could not be calibrated to the requested level.
    #[error("calibration failed at dose {dose}: {reason}")]
    Calibration { dose: usize, reason: String },

    /// Data and critical values describe different designs.
    #[error("design mismatch: {0}")]
    DesignMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn data(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}
