use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("parameter {index} = {value} outside bounds [{lo}, {hi}]")]
    BoundsViolation {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("action {action} is not legal in state {state}")]
    InvalidAction { state: usize, action: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("goal is not reachable from start")]
    UnreachableGoal,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("belief ensemble is empty")]
    EmptyEnsemble,

    #[error("degenerate query: {0}")]
    DegenerateQuery(String),

    #[error("kernel matrix is not positive definite even with jitter {0:e}")]
    NotPositiveDefinite(f64),

    #[error("ground-truth return is zero; percentage difference is undefined")]
    UndefinedBaseline,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("session error: {0}")]
    Session(String),

    #[error("stale query id {got}; pending query is {pending}")]
    StaleQuery { got: String, pending: String },

    #[error("osm: {0}")]
    Osm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
