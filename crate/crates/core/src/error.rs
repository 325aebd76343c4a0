use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("set is unbounded along coordinate {0}")]
    Unbounded(usize),
    #[error("set is empty")]
    EmptySet,
    #[error("trajectory leaves the free space during t in [{t0}, {t1}]")]
    Coverage { t0: f64, t1: f64 },
    #[error("unsupported dimension {0} (only d = 2 is supported here)")]
    UnsupportedDimension(usize),
    #[error("instance error: {0}")]
    Instance(String),
    #[error("sampling failed: {0}")]
    Crowded(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
