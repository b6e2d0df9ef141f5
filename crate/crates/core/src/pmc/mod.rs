//! Population Monte Carlo engines.
//!
//! [`npmc_run`] implements nonlinear PMC: Gaussian proposals moment-matched
//! to the previous resampled population and a configurable transformation
//! of the unnormalized weights. Generic PMC is the identity-transform case,
//! [`modified_npmc_run`] applies the transformation only while the ESS is
//! below a threshold, and [`std_pmc_run`] is the random-walk multi-scale
//! baseline. [`convergence_error_curves`] measures how far clipped-weight
//! estimates drift from standard importance sampling as `M` grows.

mod convergence;
mod estimate;
mod model;
mod npmc;
mod std_pmc;

pub use convergence::{convergence_error_curves, ConvergenceRow};
pub use estimate::{bridge_estimate, estimate};
pub use model::TargetModel;
pub use npmc::{modified_npmc_run, npmc_run, NpmcConfig};
pub use std_pmc::{std_pmc_run, StdPmcConfig, StdPmcOutput};

use std::time::Duration;

use crate::sampling::ParticleSet;

/// Diagnostics for one iteration. Iteration 0 is the prior draw.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub m: usize,
    pub ness_standard: f64,
    pub ness_transformed: f64,
    pub max_weight_standard: f64,
    /// Whether the weight transformation changed this iteration's weights.
    pub transform_applied: bool,
    /// Posterior mean under the transformed weights.
    pub mean: Vec<f64>,
    /// Row-major `K x K` posterior covariance under the transformed weights.
    pub covariance: Vec<f64>,
    /// `log((1/M) sum w*)` of the standard weights.
    pub log_evidence: f64,
    /// Mean of the resampled (unweighted) population.
    pub resampled_mean: Vec<f64>,
    /// Per-coordinate `1/M` variance of the resampled population.
    pub resampled_variance: Vec<f64>,
    /// Particles whose standard weight is zero.
    pub zero_weights: usize,
    pub wall_time: Duration,
}

impl IterationRecord {
    /// Bitwise equality of everything except wall time.
    pub fn same_trace(&self, other: &Self) -> bool {
        fn bits(v: &[f64]) -> Vec<u64> {
            v.iter().map(|x| x.to_bits()).collect()
        }
        self.iteration == other.iteration
            && self.m == other.m
            && self.transform_applied == other.transform_applied
            && self.zero_weights == other.zero_weights
            && bits(&[
                self.ness_standard,
                self.ness_transformed,
                self.max_weight_standard,
                self.log_evidence,
            ]) == bits(&[
                other.ness_standard,
                other.ness_transformed,
                other.max_weight_standard,
                other.log_evidence,
            ])
            && bits(&self.mean) == bits(&other.mean)
            && bits(&self.covariance) == bits(&other.covariance)
            && bits(&self.resampled_mean) == bits(&other.resampled_mean)
            && bits(&self.resampled_variance) == bits(&other.resampled_variance)
    }
}

/// Result of a PMC run.
#[derive(Debug, Clone)]
pub struct PmcOutput {
    pub records: Vec<IterationRecord>,
    /// Final-iteration particles with their transformed weights.
    pub particles: ParticleSet,
    /// Final-iteration resampled population.
    pub resampled: ParticleSet,
}

impl PmcOutput {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a run has at least one iteration")
    }
}
