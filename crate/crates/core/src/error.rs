use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch, left is {left:?}, right is {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("coordinate ({row}, {col}) out of range for {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("duplicate coordinate ({0}, {1})")]
    DuplicateEntry(usize, usize),

    #[error("non-finite value at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("objective became non-finite at iteration {iteration} (last finite value {last})")]
    Diverged { iteration: usize, last: f64 },

    #[error("{columns} columns requested but occupied bins need at least {required}")]
    TooFewColumns { columns: usize, required: usize },

    #[error("both samples have zero variance; t statistic undefined")]
    ZeroVariance,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
