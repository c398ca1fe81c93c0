use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Hilbert dimension {dim} exceeds the supported maximum of {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystem(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("entanglement not certifiable: witness expectation {witness:.6} is non-negative")]
    NotCertifiable { witness: f64 },

    #[error("target confidence not reached within {max_budget} shots")]
    BudgetExhausted { max_budget: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O failure: {0}")]
    Io(String),
}
