use thiserror::Error;

/// Errors produced by ingestion, estimators and the study harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed record at row {row}: {reason}")]
    MalformedRecord { row: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid comparison counts: {0}")]
    InvalidCounts(String),

    #[error("invalid probability matrix: {0}")]
    InvalidProbabilities(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("filtering removed every player")]
    EmptyResult,

    #[error(
        "Bradley-Terry likelihood is ill-posed: comparison graph has {components} strongly \
         connected components; filter players with the `bt-connected` policy first"
    )]
    NotStronglyConnected { components: usize },

    #[error("no convergence after {iters} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iters: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-unique ranking: p[{i}][{j}] = 0.5")]
    NonUniqueRanking { i: usize, j: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
