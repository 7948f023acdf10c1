use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("diffusion index {0} exceeds the supported maximum {max}", max = crate::kernel::MAX_INDEX)]
    IndexTooLarge(usize),

    #[error("state vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("starting points coincide: the processes are already coupled")]
    AlreadyCoupled,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no outcomes to aggregate")]
    EmptyInput,

    #[error("cannot fit a rate: {0}")]
    DegenerateFit(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}
