//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A value is outside the mathematical domain of an operation
    /// (zero inverted, singular matrix, degree mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Incompatible shapes or sizes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Structurally malformed input data (bad cover, dangling reference,
    /// unparsable scalar, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// An identity that must hold by construction failed; indicates a bug
    /// rather than bad input.
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
