use thiserror::Error;

/// Errors produced by the simulation and metrology routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A computation produced a value outside its mathematical range, or an
    /// iterative solver failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The requested system is too large for the dense statevector backend.
    #[error("system size L = {l} exceeds the statevector cap of {cap}; use the free-fermion backend for larger chains")]
    SizeCap { l: usize, cap: usize },

    /// The model cannot be handled by the requested backend.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
