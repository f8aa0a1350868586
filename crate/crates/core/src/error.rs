use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
