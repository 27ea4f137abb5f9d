use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{points} points per axis alias frequencies up to {max_freq} (need more than {})", 2 * max_freq)]
    Aliasing { points: usize, max_freq: u64 },
    /// Parameters fall outside the regime an operation covers.
    #[error("regime violation: {0}")]
    Regime(String),
    /// The critical smoothness `r = d/p`, where the order is not known.
    #[error("open case: {0}")]
    OpenCase(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
