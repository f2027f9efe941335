//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced by kernel construction, selection, re-ranking, metrics,
/// the data pipeline, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("cannot extend factor with non-positive pivot d = {d}")]
    DegenerateExtension { d: f64 },

    #[error("degenerate pivot d = {d} while updating candidates")]
    DegeneratePivot { d: f64 },

    #[error("cannot drop a row from an empty factor")]
    EmptyFactor,

    #[error("downdate trace has {trace_len} levels but candidate vector has {c_len} entries")]
    TraceMismatch { trace_len: usize, c_len: usize },

    #[error("matrix is not symmetric: |A[{i},{j}] - A[{j},{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("matrix is not positive semidefinite: leading minor {minor_index} is not positive")]
    NotPsd { minor_index: usize },

    #[error("feature row {row} is not unit-norm: |f| = {norm}")]
    NotUnitNorm { row: usize, norm: f64 },

    #[error("score {value} at index {index} is negative; Gram kernels need nonnegative scores")]
    NegativeScore { index: usize, value: f64 },

    #[error("trade-off parameter theta = {theta} is outside [0, 1]")]
    InvalidTheta { theta: f64 },

    #[error("theta = 1 has no finite kernel scaling; use the pure-relevance ranking path instead")]
    ThetaOne,

    #[error("numerical failure (non-finite gain) at iteration {iteration}")]
    NumericalFailure { iteration: usize },

    #[error("instance has {m} items; exhaustive search is limited to {limit}")]
    TooLarge { m: usize, limit: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("user {user}: list has fewer than two items; intra-list distance is undefined")]
    ListTooShort { user: u64 },

    #[error("user {user}: no item pair within positional distance {window}")]
    NoQualifyingPair { user: u64, window: usize },

    #[error("no popularity weight for held-out item {item}")]
    MissingWeight { item: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for validation/input errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateExtension { .. }
            | Error::DegeneratePivot { .. }
            | Error::NumericalFailure { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
