use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("target column `{0}` not found")]
    MissingTarget(String),

    #[error("target column `{column}` must have exactly two distinct values, found {found}")]
    NonBinaryTarget { column: String, found: usize },

    #[error("unparseable cell at row {row}, column `{column}`: {value:?}")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("table has no data rows")]
    EmptyTable,

    #[error("preprocessing eliminated every feature")]
    AllFeaturesEliminated,

    #[error("target has a single class")]
    SingleClass,

    #[error("no labeled examples available")]
    NoLabeled,

    #[error("no positive examples in the dataset")]
    NoPositives,

    #[error("no non-degenerate feature available for propensity scoring")]
    NoUsableFeature,

    #[error("clustering needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("all points are identical; no 2-partition exists")]
    IdenticalPoints,

    #[error("non-finite value in feature matrix at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("repetition {rep} failed: {source}")]
    Repetition {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
