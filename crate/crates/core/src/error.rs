use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("no period found within depth {0}")]
    DepthExceeded(usize),

    #[error("orbit hits a pole at j = {0}")]
    PoleHit(usize),

    #[error("search exhausted; tried (s, tau) = {0:?}")]
    SearchExhausted(Vec<(usize, usize)>),

    #[error("property violation: {0}")]
    Violation(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of a mathematical property (as opposed to bad input).
    pub fn is_violation(&self) -> bool {
        matches!(
            self,
            Error::Violation(_) | Error::SearchExhausted(_) | Error::Internal(_)
        )
    }
}
