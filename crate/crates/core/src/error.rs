use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("root solver failed after {iterations} iterations (last L = {last_value}, residual = {residual:e})")]
    SolverFailure {
        iterations: usize,
        last_value: f64,
        residual: f64,
    },

    #[error("no successful replications in cell")]
    EmptyCell,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncation { expected: usize, found: usize },

    #[error("region out of bounds: {0}")]
    Bounds(String),

    #[error("pixel {index} is not positive definite")]
    BadPixel { index: usize },

    #[error("subsample size {requested} exceeds sample size {available}")]
    Size { requested: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
