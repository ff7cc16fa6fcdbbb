use thiserror::Error;

/// Errors raised by dataset handling, model fitting, optimization and search.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` named in the schema is missing from the file")]
    MissingColumn(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset has no rows")]
    NoRows,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientObservations { needed: usize, got: usize },

    #[error("fold count {k} out of range for {n} observations (need 2 <= k <= n)")]
    FoldCount { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("covariance matrix is not symmetric")]
    NotSymmetric,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid design goal: {0}")]
    InvalidGoal(String),

    #[error("degenerate signal-to-noise statistic: {0}")]
    DegenerateStatistic(DegenerateSnr),

    #[error("pool of {len} variables exceeds the exhaustive-search cap of {cap}")]
    PoolTooLarge { len: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// The distinct ways an SNR statistic can be undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DegenerateSnr {
    #[error("deviation about the target is zero")]
    ZeroDeviation,
    #[error("sample mean is zero")]
    ZeroMean,
    #[error("observation equal to zero in larger-is-better mode")]
    ZeroObservation,
    #[error("all observations are zero in smaller-is-better mode")]
    AllZero,
    #[error("not enough observations")]
    TooFewObservations,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
