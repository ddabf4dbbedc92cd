use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inconsistent inputs, e.g. series with different truncation orders.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A valid request the toolkit deliberately does not handle (even q, q > 13).
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The operation refused an input that violates its precondition.
    #[error("rejected: {0}")]
    Rejected(String),
    /// An iterative solver failed where a solution was expected.
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
