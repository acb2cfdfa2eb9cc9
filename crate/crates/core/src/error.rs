use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative argument: {0}")]
    NegativeArgument(f64),

    #[error("invalid Young function: {0}")]
    InvalidYoung(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("point {0} carries zero mass")]
    NullAtom(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("non-finite value while evaluating level {0}")]
    Overflow(usize),

    #[error("degenerate certificate: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
