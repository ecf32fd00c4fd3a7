use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
    #[error("operator is not positive definite: {0}")]
    IndefiniteOperator(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
