use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("classification indeterminate: {0}")]
    ClassificationIndeterminate(String),
    #[error("infinite scattering length parameter: {0}")]
    InfiniteAlpha(String),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error("not in logarithmic regime: {0}")]
    NotInLogRegime(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("scattering identity violated: {0}")]
    ScatteringInconsistency(String),
    #[error("energy stalled: {0}")]
    Stalled(String),
    #[error("monotonicity violated: {0}")]
    MonotonicityViolation(String),
    #[error("inner solver failed: {0}")]
    InnerSolver(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("ladder too coarse: {0}")]
    LadderTooCoarse(String),
    #[error("kernel under-resolved, refine grid: {0}")]
    RefineGrid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
