use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("structure rejected: tamedness margin {margin:e} below {threshold:e}")]
    NotTamed { margin: f64, threshold: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Relative residual after each iteration.
        history: Vec<f64>,
    },
    #[error("not an admissible potential: positivity margin {margin:e}")]
    NotAdmissible { margin: f64 },
    #[error("unsupported dimension: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
