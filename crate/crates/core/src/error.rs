use thiserror::Error;

pub type Result<T> = std::result::Result<T, BellError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Request exceeds a configured size cap.
    #[error("capacity error: {what} needs N <= {max}, got N = {requested}")]
    Capacity { what: &'static str, requested: usize, max: usize },

    /// Two independent evaluation routes disagreed.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),
}

impl BellError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BellError::Domain(msg.into())
    }
}
