//! Experiment runner behind the `npmc` binary.
//!
//! Each experiment writes its CSV tables to the output directory and also
//! returns them in memory, so tests can check results without parsing files.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::{run, Report};

/// Exit status for invalid configuration.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status when every particle weight vanished during a run.
pub const EXIT_DEGENERATE: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Sampler(#[from] npmc::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed table: {0}")]
    Format(String),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Sampler(npmc::Error::Degenerate { .. }) => EXIT_DEGENERATE,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        let config = RunError::Config(ConfigError::Invalid {
            field: "m",
            reason: "zero".into(),
        });
        assert_eq!(config.exit_code(), EXIT_CONFIG);
        assert_eq!(RunError::Sampler(npmc::Error::Degenerate { iteration: 3 }).exit_code(), EXIT_DEGENERATE);
        assert_eq!(RunError::Sampler(npmc::Error::AllWeightsZero).exit_code(), 1);
        assert_eq!(RunError::Format("x".into()).exit_code(), 1);
    }
}
