use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{pf_loglik, GammaPrior, LvRates, SkmObservations, DEFAULT_MAX_EVENTS};
use crate::error::{invalid, Result};
use crate::pmc::{modified_npmc_run, npmc_run, NpmcConfig, PmcOutput, TargetModel};
use crate::sampling::{RngStream, StreamRng};

/// Rate posterior given snapshots, with a particle-filter likelihood.
#[derive(Debug)]
pub struct SkmModel {
    pub prior: GammaPrior,
    pub obs: SkmObservations,
    pub x0: [u64; 2],
    pub j_particles: usize,
    pub max_events: u64,
    explosions: AtomicU64,
}

impl SkmModel {
    pub fn new(prior: GammaPrior, obs: SkmObservations, x0: [u64; 2], j_particles: usize) -> Result<Self> {
        if j_particles < 1 {
            return Err(invalid("j_particles", "need at least one particle"));
        }
        Ok(Self {
            prior,
            obs,
            x0,
            j_particles,
            max_events: DEFAULT_MAX_EVENTS,
            explosions: AtomicU64::new(0),
        })
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    /// Particle propagations aborted by the event budget so far.
    pub fn explosion_count(&self) -> u64 {
        self.explosions.load(Ordering::Relaxed)
    }
}

impl TargetModel for SkmModel {
    fn dim(&self) -> usize {
        3
    }

    fn sample_prior_one(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..3)
            .map(|k| {
                Gamma::new(self.prior.a[k], 1.0 / self.prior.b[k])
                    .expect("validated prior")
                    .sample(rng)
            })
            .collect()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta)
    }

    fn log_likelihood(&self, theta: &[f64], rng: &mut StreamRng) -> f64 {
        let Ok(rates) = LvRates::new([theta[0], theta[1], theta[2]]) else {
            return f64::NEG_INFINITY;
        };
        let stream = RngStream::new(rng.random(), rng.random());
        match pf_loglik(&rates, &self.obs, self.x0, self.j_particles, stream, self.max_events) {
            Ok(est) => {
                self.explosions.fetch_add(est.explosions, Ordering::Relaxed);
                est.log_likelihood
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// NPMC over the rates; the modified variant runs when `cfg.min_eff` is set.
pub fn skm_npmc_run(model: &SkmModel, cfg: &NpmcConfig) -> Result<PmcOutput> {
    if cfg.min_eff.is_some() {
        modified_npmc_run(model, cfg)
    } else {
        npmc_run(model, cfg)
    }
}
