use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid robot specification: {0}")]
    InvalidSpec(String),

    #[error("state out of range: {0}")]
    OutOfRange(String),

    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),

    /// A corridor coordinate on or outside a wall, a bad move set, or
    /// any other argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("unknown state {0}")]
    UnknownState(String),

    #[error("no feasible transition at step {step}: {reason}")]
    NoFeasibleTransition { step: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
