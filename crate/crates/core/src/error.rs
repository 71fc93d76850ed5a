use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,

    #[error("non-finite {what} for point id {id}")]
    NonFinite { id: i64, what: &'static str },

    #[error("duplicate point id {0}")]
    DuplicateId(i64),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("no usable predictors (all columns have zero variance)")]
    NoUsablePredictors,

    #[error("predictor schema mismatch: missing columns [{}], unexpected columns [{}]", missing.join(", "), extra.join(", "))]
    SchemaMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("point set has no response column")]
    MissingResponse,

    #[error("at least {needed} points required, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid fold assignment: {0}")]
    InvalidFolds(String),

    #[error("only {blocks} nonempty blocks for k = {k}; increase k-feasibility: finer blocks or smaller k")]
    TooFewBlocks { blocks: usize, k: usize },

    #[error("all training points coincide; no spatial structure to cluster")]
    DegeneratePoints,

    #[error("AOA empty: no prediction point lies inside the area of applicability")]
    EmptyAoa,

    #[error("leakage: id {0} appears in both training and evaluation data")]
    Leakage(i64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
