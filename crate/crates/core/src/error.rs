use thiserror::Error;

/// Errors raised by design construction and evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected m = {expected}, found m = {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid half-design: runs {first} and {second} {reason}")]
    InvalidHalf {
        first: usize,
        second: usize,
        reason: &'static str,
    },

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error("capability limit: {0}")]
    Capability(String),

    #[error("kernel matrix is not positive definite: {0}")]
    Conditioning(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
