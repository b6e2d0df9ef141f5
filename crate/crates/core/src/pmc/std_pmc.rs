use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::npmc::make_record;
use super::{IterationRecord, PmcOutput, TargetModel};
use crate::error::{invalid, Error, Result};
use crate::sampling::{resample_with_indices, ParticleSet, RngStream};
use crate::weights::{normalize, LogWeights};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Random-walk PMC with a fixed set of isotropic scales.
#[derive(Debug, Clone, PartialEq)]
pub struct StdPmcConfig {
    /// Proposal variances `v_j`.
    pub scales: Vec<f64>,
    /// Initial particles per scale; `M = scales.len() * samples_per_scale`.
    pub samples_per_scale: usize,
    pub iterations: usize,
    /// Minimum share of `M` kept on every scale.
    pub min_fraction: f64,
    pub seed: u64,
}

impl StdPmcConfig {
    pub fn m(&self) -> usize {
        self.scales.len() * self.samples_per_scale
    }

    fn floor_count(&self) -> usize {
        (self.min_fraction * self.m() as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() || self.scales.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("scales", "need at least one positive finite variance"));
        }
        if self.m() < 2 {
            return Err(invalid("samples_per_scale", "M = p m must be at least 2"));
        }
        if self.iterations < 1 {
            return Err(invalid("iterations", "need at least one"));
        }
        if !(0.0..1.0).contains(&self.min_fraction) || self.scales.len() * self.floor_count() > self.m() {
            return Err(invalid("min_fraction", "per-scale floor exceeds M"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StdPmcOutput {
    pub run: PmcOutput,
    /// Particles per scale used at each iteration (`r_j`).
    pub scale_counts: Vec<Vec<usize>>,
}

/// Multi-scale random-walk PMC. Particle `i` at iteration `l` moves from the
/// `i`-th resampled particle of iteration `l-1` with variance `v_j` of the
/// scale it is assigned to; the weight denominator is that single kernel.
pub fn std_pmc_run<T: TargetModel + ?Sized>(model: &T, cfg: &StdPmcConfig) -> Result<StdPmcOutput> {
    cfg.validate()?;
    let m = cfg.m();
    let root = RngStream::root(cfg.seed);
    let mut counts = vec![cfg.samples_per_scale; cfg.scales.len()];
    let mut scale_counts = Vec::with_capacity(cfg.iterations + 1);
    let mut records: Vec<IterationRecord> = Vec::with_capacity(cfg.iterations + 1);
    let mut previous: Option<ParticleSet> = None;
    let mut last = None;

    for iteration in 0..=cfg.iterations {
        let started = Instant::now();
        let stream = root.child(iteration as u64).child(0);
        let scale_of: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(j, &r)| std::iter::repeat_n(j, r))
            .collect();

        let pairs: Vec<(Vec<f64>, f64)> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.child(i as u64).rng();
                match &previous {
                    None => {
                        let theta = model.sample_prior_one(&mut rng);
                        let lw = if model.log_prior(&theta) == f64::NEG_INFINITY {
                            f64::NEG_INFINITY
                        } else {
                            model.log_likelihood(&theta, &mut rng)
                        };
                        (theta, lw)
                    }
                    Some(prev) => {
                        let v = cfg.scales[scale_of[i]];
                        let center = &prev.positions()[i];
                        let theta: Vec<f64> = center
                            .iter()
                            .map(|c| c + v.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal))
                            .collect();
                        let lp = model.log_prior(&theta);
                        if lp == f64::NEG_INFINITY {
                            return (theta, f64::NEG_INFINITY);
                        }
                        let ll = model.log_likelihood(&theta, &mut rng);
                        let lq: f64 = theta
                            .iter()
                            .zip(center)
                            .map(|(x, c)| -0.5 * (LN_2PI + v.ln()) - 0.5 * (x - c) * (x - c) / v)
                            .sum();
                        (theta, ll + lp - lq)
                    }
                }
            })
            .collect();
        let (positions, lw): (Vec<_>, Vec<_>) = pairs
            .into_iter()
            .map(|(x, w)| (x, if w.is_nan() { f64::NEG_INFINITY } else { w }))
            .unzip();
        let standard = LogWeights::new(lw)?;
        let (w, log_norm) = normalize(&standard).map_err(|_| Error::Degenerate { iteration })?;

        let (resampled, origin) = resample_with_indices(&positions, &w, root.child(iteration as u64).child(1));
        let resampled = ParticleSet::unweighted(resampled)?;
        let particles = ParticleSet::weighted(positions, w.clone())?;
        records.push(make_record(iteration, &standard, &w, log_norm, false, &particles, &resampled, started));
        scale_counts.push(counts.clone());

        if iteration > 0 {
            let mut survivors = vec![0; counts.len()];
            for i in origin {
                survivors[scale_of[i]] += 1;
            }
            counts = apply_floor(survivors, cfg.floor_count(), m);
        }
        previous = Some(resampled.clone());
        last = Some((particles, resampled));
    }

    let (particles, resampled) = last.expect("at least one iteration");
    Ok(StdPmcOutput {
        run: PmcOutput {
            records,
            particles,
            resampled,
        },
        scale_counts,
    })
}

/// Raises every count to `floor`, then takes the excess back from the
/// largest count one at a time (lowest index first on ties) so the total stays `m`.
fn apply_floor(mut counts: Vec<usize>, floor: usize, m: usize) -> Vec<usize> {
    for c in counts.iter_mut() {
        *c = (*c).max(floor);
    }
    let mut excess = counts.iter().sum::<usize>() - m;
    while excess > 0 {
        let (j, _) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        counts[j] -= 1;
        excess -= 1;
    }
    counts
}
