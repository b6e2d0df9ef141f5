mod convergence;
mod degeneracy;
mod gmm;
mod skm;

pub use convergence::{run_convergence, ConvergenceReport, GaussianTarget, TEST_FUNCTIONS};
pub use degeneracy::run_degeneracy;
pub use gmm::{run_gmm_comparison, AlgorithmSummary, GmmReport};
pub use skm::{run_skm, SkmReport, SkmRunOutcome};

use npmc::gmm::DegeneracyCell;
use npmc::sampling::RngStream;
use rand::RngCore;

use crate::config::{CommonArgs, Experiment, ExperimentConfig};
use crate::RunError;

#[derive(Debug, Clone)]
pub enum Report {
    Degeneracy(Vec<DegeneracyCell>),
    Gmm(GmmReport),
    Skm(SkmReport),
    Convergence(ConvergenceReport),
}

/// Validates `cfg`, creates the output directory and runs the experiment on
/// a pool of `--threads` workers (the global pool when unset).
pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.common.out)?;
    let go = || -> Result<Report, RunError> {
        let common = &cfg.common;
        Ok(match &cfg.experiment {
            Experiment::Degeneracy(c) => Report::Degeneracy(run_degeneracy(common, c)?),
            Experiment::Gmm(c) => Report::Gmm(run_gmm_comparison(common, c)?),
            Experiment::Skm(c) => Report::Skm(run_skm(common, c)?),
            Experiment::Convergence(c) => Report::Convergence(run_convergence(common, c)?),
        })
    };
    match cfg.common.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(go),
        None => go(),
    }
}

/// Seed for an engine that takes a plain `u64`, unique per `path`.
pub(crate) fn derive_seed(common: &CommonArgs, path: &[u64]) -> u64 {
    RngStream::root(common.seed).descend(path).rng().next_u64()
}
