use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: entry ({row}, {col}) = {value} but ({col}, {row}) = {mirror}")]
    Asymmetric {
        row: usize,
        col: usize,
        value: f64,
        mirror: f64,
    },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("diagonal entry ({index}, {index}) is {value}, expected 0")]
    NonZeroDiagonal { index: usize, value: f64 },
    #[error("similarity ({row}, {col}) = {value} is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("node {index} has zero degree")]
    ZeroDegree { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty collection: {0}")]
    EmptyCollection(String),
    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },
    #[error("eigensolver failed to converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to rejected input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}
