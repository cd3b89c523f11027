use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lambda must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("invalid loss: {0}")]
    InvalidLoss(String),
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),
    #[error("inconsistent penalty: {0}")]
    InconsistentPenalty(String),
    #[error("matrix contains non-finite entry at ({row}, {col})")]
    NonFiniteMatrix { row: usize, col: usize },
    #[error("gradient evaluated outside the loss domain")]
    DomainViolation,
    #[error("problem dimension {n} exceeds the enumeration cap {max}")]
    DimensionExceeded { n: usize, max: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

pub type Result<T> = std::result::Result<T, Error>;
