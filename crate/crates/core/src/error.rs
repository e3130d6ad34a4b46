//! Crate-wide error type.

use crate::types::CanonicalPair;

/// Alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column {0} is constant (zero sample variance)")]
    ConstantColumn(usize),

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("covariance block {0} is not symmetric")]
    AsymmetricBlock(&'static str),

    #[error("matrix is not positive definite (Cholesky pivot {0} failed)")]
    NotPositiveDefinite(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample covariance is singular")]
    SingularCovariance,

    #[error("classical CCA is degenerate: n = {n} <= max(p_x, p_y) = {p}")]
    DimensionTooHigh { n: usize, p: usize },

    #[error("infeasible penalty: c = {c} < 1 cannot bind against a unit l2 ball")]
    InfeasiblePenalty { c: f64 },

    /// The alternating solver hit its iteration cap. The last iterate is
    /// attached so callers may still use it.
    #[error("solver did not converge within {iters} iterations")]
    DidNotConverge {
        iters: usize,
        last: Box<CanonicalPair>,
    },

    #[error("support target {target} unreachable; densest achievable support is {achieved}")]
    TargetUnreachable { target: usize, achieved: usize },

    #[error("empty penalty grid")]
    EmptyGrid,

    #[error("cross-validation fold has only {0} rows (need at least 3)")]
    FoldTooSmall(usize),

    #[error("non-positive variance estimate at index {0}")]
    NonPositiveVariance(usize),

    #[error("input matrix must be symmetric")]
    AsymmetricInput,

    #[error("too few rows: {got} (need at least {need})")]
    TooFewRows { got: usize, need: usize },

    #[error("p-value outside [0, 1] at index {0}")]
    InvalidPValue(usize),

    #[error("preliminary canonical vector has empty support")]
    EmptyPreliminarySupport,

    #[error("too many active columns: {requested} > {available}")]
    TooManyActive { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
