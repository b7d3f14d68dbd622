use thiserror::Error;

/// Errors raised by the linear-algebra kernel and everything built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular: pivot {pivot:e} at step {step}")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid band layout: {0}")]
    InvalidBand(String),

    #[error("GMRES breakdown at Arnoldi step {0}")]
    BreakdownAtStep(usize),

    #[error("Gram system still indefinite after regularization (last ridge {ridge:e})")]
    IndefiniteAfterRegularization { ridge: f64 },

    #[error("vector is not admissible for this inner product: component {index} = {value:e} outside block mask")]
    NotAdmissible { index: usize, value: f64 },

    #[error("division by zero: residual norm already zero (converged)")]
    DivisionByZero,

    #[error("inner linear solve failed: {0}")]
    LinearSolveFailure(Box<Error>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
