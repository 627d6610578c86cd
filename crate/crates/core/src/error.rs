use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on shapes or values was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The verifier could not evaluate an assignment (wrong length, symbol out of range).
    #[error("task definition error: {0}")]
    Task(String),

    /// Task parameters admit no valid assignment.
    #[error("infeasible task: {0}")]
    Infeasible(String),

    /// Exhaustive computation refused because the space is too large.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
