//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("cell at data row {row}, column {column:?} is not a finite number: {value:?}")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),

    #[error("table has no data rows")]
    EmptyTable,

    #[error("table has no feature columns")]
    NoFeatureColumns,

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label {0:?} is not part of the supplied encoding")]
    UnknownLabel(String),

    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),

    #[error("fold count {k} exceeds sample count {n}")]
    TooManyFolds { k: usize, n: usize },

    #[error("class {0:?} has no training samples")]
    EmptyClass(String),

    #[error("ball must have at least one member")]
    EmptyBall,

    #[error("operation needs at least {needed} members, got {got}")]
    TooFewMembers { needed: usize, got: usize },

    #[error("left members must form a proper nonempty subset of the parent")]
    ImproperSubset,

    #[error("partition sizes are degenerate: {n_left} of {n_total}")]
    DegeneratePartition { n_total: usize, n_left: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
