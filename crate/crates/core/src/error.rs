use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("all weights zero")]
    AllWeightsZero,

    #[error("all weights zero at iteration {iteration}")]
    Degenerate { iteration: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("particle set is unweighted")]
    Unweighted,

    #[error("covariance is not positive definite even after jitter")]
    NotPositiveDefinite,

    #[error("grid too small: boundary holds {fraction:e} of the posterior mass")]
    GridTooSmall { fraction: f64 },

    #[error("population explosion: more than {max_events} events in one segment")]
    PopulationExplosion { max_events: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
