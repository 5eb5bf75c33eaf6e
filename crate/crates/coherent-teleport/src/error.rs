use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("operator is not unitary: {0}")]
    NotUnitary(String),

    #[error("operator norm exceeds one: {0}")]
    NotContraction(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dictionary is numerically degenerate: {0}")]
    DegenerateDictionary(String),

    #[error("operator action undefined on input: {0}")]
    UndefinedAction(String),

    #[error("measurement outcome has vanishing probability (denominator {denominator:.3e})")]
    ZeroProbability { denominator: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
