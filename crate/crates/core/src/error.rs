use thiserror::Error;

pub type Result<T, E = SpcaError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpcaError {
    #[error("matrix must have at least one row")]
    EmptyMatrix,

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("expected {expected} entries for an {n}x{n} matrix, got {got}")]
    BadLength { n: usize, expected: usize, got: usize },

    #[error("matrix is not symmetric: |Q[{i}][{j}] - Q[{j}][{i}]| = {gap:e} exceeds {tol:e}")]
    Asymmetric { i: usize, j: usize, gap: f64, tol: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("index set {indices:?} is invalid for dimension {parent_dim}")]
    InvalidIndexSet { indices: Vec<usize>, parent_dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sparsity p = {p} must satisfy 1 <= p <= n = {n}")]
    InvalidSparsity { p: usize, n: usize },

    #[error("component count K = {k} must satisfy 1 <= K <= n = {n}")]
    InvalidComponentCount { k: usize, n: usize },

    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),

    #[error("previous components already span the whole space; no orthogonal direction is left")]
    NoOrthogonalDirection,

    #[error("oracle refused: n = {n} exceeds the oracle cap {cap}")]
    OracleCapExceeded { n: usize, cap: usize },

    #[error("{0}")]
    InvalidInput(String),
}
