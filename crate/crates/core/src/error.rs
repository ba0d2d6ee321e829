use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate entity: {0}")]
    DegenerateEntity(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("polynomial degree k must be >= 3 (got {0})")]
    DegreeTooLow(usize),
    #[error("singular local matrix: {0}")]
    SingularMatrix(String),
    #[error("system matrix is not positive definite: {0}")]
    Indefinite(String),
    #[error("solver did not reach the requested residual: {achieved:e} > {tol:e}")]
    NotConverged { achieved: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
