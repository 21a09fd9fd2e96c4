use thiserror::Error;

/// Errors produced anywhere in the extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("singular kernel system; use a ridge parameter > 0 ({0})")]
    SingularSystem(String),

    #[error("regressor has not been fitted")]
    Unfitted,

    #[error("observation table is not closed at tolerance {0}")]
    NotClosed(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of {0} words exceeds the guard bound")]
    TooManyWords(u128),

    #[error("empty word list")]
    EmptyWordList,

    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
