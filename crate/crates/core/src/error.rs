use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("matrix is numerically singular")]
    Singular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
    #[error("negative diagonal entry at row {0}")]
    NegativeDiagonal(usize),
    #[error("singular diagonal block {0}")]
    SingularBlock(usize),
    #[error("nonpositive pivot at row {0} in incomplete factorization")]
    IcPivot(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
