use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (negative `x`, `u > 1`, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A distribution or model parameter is invalid.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Array dimensions do not conform.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The kernel matrix has no positive eigenvalue.
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    /// The forward model `Z = (mT + z0)^p` is outside the supported family.
    #[error("unsupported forward model: {0}")]
    UnsupportedModel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input file could not be parsed. `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
