use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("axis {axis}: center {coordinate} is {distance} from the nearest node (tolerance {tolerance}); refine the grid")]
    SnapFailure {
        axis: usize,
        coordinate: f64,
        distance: f64,
        tolerance: f64,
    },
    #[error("dense size guard: {requested} entries exceeds limit {limit}")]
    SizeGuard { requested: usize, limit: usize },
    #[error("division guard: {0}")]
    DivisionGuard(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("target accuracy {target:e} not reached within {cap} terms (best {achieved:e})")]
    Unattainable {
        target: f64,
        achieved: f64,
        cap: usize,
    },
    #[error("pair guard: {pairs} ordered pairs exceeds limit {limit}")]
    PairGuard { pairs: u128, limit: u128 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
