//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problems in an instance: bad scope, empty domain,
    /// duplicate constraint pair, mismatched matrix dimensions.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A precondition of an operation was violated by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numeric argument outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed instance text. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
