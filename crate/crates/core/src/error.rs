// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Unsupported generator parameters or malformed structural input.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested work exceeds an exhaustive or representational limit.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// Input data violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// Correlation is undefined because a vector has zero variance.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),
    /// A text record could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
