use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid point id {id} (system has {len} points)")]
    InvalidPoint { id: usize, len: usize },

    #[error("capacity exceeded: {what} needs {needed}, budget is {budget}")]
    Capacity {
        what: String,
        needed: u64,
        budget: u64,
    },

    #[error("infeasible cover: point {point} has no admissible ball ({reason})")]
    Infeasible { point: usize, reason: String },

    #[error("metric axiom violated: {0}")]
    Metric(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    /// A constructed object failed its own verification.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
