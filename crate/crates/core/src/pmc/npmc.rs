use std::time::Instant;

use rayon::prelude::*;

use super::{IterationRecord, PmcOutput, TargetModel};
use crate::error::{invalid, Error, Result};
use crate::sampling::{fit_gaussian_proposal, resample_with_indices, GaussianProposal, ParticleSet, RngStream};
use crate::weights::{ess, max_weight, ness, normalize, LogWeights, NormalizedWeights, WeightTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct NpmcConfig {
    /// Samples per iteration.
    pub m: usize,
    /// Number of adaptive iterations after the prior draw.
    pub iterations: usize,
    pub transform: WeightTransform,
    /// ESS threshold below which the modified algorithm applies the transform.
    pub min_eff: Option<f64>,
    pub seed: u64,
}

impl NpmcConfig {
    pub fn new(m: usize, iterations: usize, transform: WeightTransform, seed: u64) -> Self {
        Self {
            m,
            iterations,
            transform,
            min_eff: None,
            seed,
        }
    }

    pub fn with_min_eff(mut self, min_eff: f64) -> Self {
        self.min_eff = Some(min_eff);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid("m", format!("{} < 2", self.m)));
        }
        if self.iterations < 1 {
            return Err(invalid("iterations", "need at least one"));
        }
        if let Some(t) = self.min_eff {
            if !(1.0..=self.m as f64).contains(&t) {
                return Err(invalid("min_eff", format!("{t} outside [1, {}]", self.m)));
            }
        }
        self.transform.validate(self.m)
    }
}

/// Nonlinear PMC. The transform is applied at every iteration; any
/// `min_eff` in the config is ignored.
pub fn npmc_run<T: TargetModel + ?Sized>(model: &T, cfg: &NpmcConfig) -> Result<PmcOutput> {
    cfg.validate()?;
    run(model, cfg, None)
}

/// Modified NPMC: the transform is applied only at iterations whose
/// standard ESS is below `cfg.min_eff`.
pub fn modified_npmc_run<T: TargetModel + ?Sized>(model: &T, cfg: &NpmcConfig) -> Result<PmcOutput> {
    cfg.validate()?;
    let min_eff = cfg.min_eff.ok_or_else(|| invalid("min_eff", "required by modified NPMC"))?;
    run(model, cfg, Some(min_eff))
}

enum Proposal {
    Prior,
    Gaussian(GaussianProposal),
}

fn run<T: TargetModel + ?Sized>(model: &T, cfg: &NpmcConfig, min_eff: Option<f64>) -> Result<PmcOutput> {
    let root = RngStream::root(cfg.seed);
    let mut proposal = Proposal::Prior;
    let mut records = Vec::with_capacity(cfg.iterations + 1);
    let mut last = None;

    for iteration in 0..=cfg.iterations {
        let started = Instant::now();
        let stream = root.child(iteration as u64);
        let (positions, standard) = draw_and_weigh(model, &proposal, cfg.m, stream.child(0))?;

        let (w_std, log_norm) = normalize(&standard).map_err(|_| Error::Degenerate { iteration })?;
        let fire = !cfg.transform.is_identity() && min_eff.is_none_or(|t| ess(&w_std) < t);
        let w_bar = if fire {
            let transformed = cfg.transform.apply(&standard, iteration)?;
            normalize(&transformed).map_err(|_| Error::Degenerate { iteration })?.0
        } else {
            w_std.clone()
        };

        let (resampled, _) = resample_with_indices(&positions, &w_bar, stream.child(1));
        let resampled = ParticleSet::unweighted(resampled)?;
        let particles = ParticleSet::weighted(positions, w_bar)?;

        records.push(make_record(
            iteration,
            &standard,
            &w_std,
            log_norm,
            fire,
            &particles,
            &resampled,
            started,
        ));

        if iteration < cfg.iterations {
            proposal = Proposal::Gaussian(fit_gaussian_proposal(&resampled)?);
        }
        last = Some((particles, resampled));
    }

    let (particles, resampled) = last.expect("at least one iteration");
    Ok(PmcOutput {
        records,
        particles,
        resampled,
    })
}

/// Draws `m` particles and computes `log p(y|θ) + log p(θ) - log q(θ)`.
/// Particle `i` uses sub-stream `i` for both its draw and its likelihood.
fn draw_and_weigh<T: TargetModel + ?Sized>(
    model: &T,
    proposal: &Proposal,
    m: usize,
    stream: RngStream,
) -> Result<(Vec<Vec<f64>>, LogWeights)> {
    let pairs: Vec<(Vec<f64>, f64)> = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i).rng();
            match proposal {
                Proposal::Prior => {
                    let theta = model.sample_prior_one(&mut rng);
                    let lw = if model.log_prior(&theta) == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        model.log_likelihood(&theta, &mut rng)
                    };
                    (theta, lw)
                }
                Proposal::Gaussian(q) => {
                    let theta = q.sample_one(&mut rng);
                    let lp = model.log_prior(&theta);
                    if lp == f64::NEG_INFINITY {
                        return (theta, f64::NEG_INFINITY);
                    }
                    let ll = model.log_likelihood(&theta, &mut rng);
                    let lq = q.log_density(&theta).expect("proposal has the model dimension");
                    (theta, ll + lp - lq)
                }
            }
        })
        .collect();
    let (positions, lw): (Vec<_>, Vec<_>) = pairs
        .into_iter()
        .map(|(x, w)| (x, if w.is_nan() { f64::NEG_INFINITY } else { w }))
        .unzip();
    Ok((positions, LogWeights::new(lw)?))
}

#[allow(clippy::too_many_arguments)]
pub(super) fn make_record(
    iteration: usize,
    standard: &LogWeights,
    w_std: &NormalizedWeights,
    log_norm: f64,
    transform_applied: bool,
    particles: &ParticleSet,
    resampled: &ParticleSet,
    started: Instant,
) -> IterationRecord {
    let w_bar = particles.weights().expect("weighted");
    let k = particles.dim();
    let mut mean = vec![0.0; k];
    for (x, w) in particles.positions().iter().zip(w_bar.values()) {
        for (acc, xi) in mean.iter_mut().zip(x) {
            *acc += w * xi;
        }
    }
    let mut covariance = vec![0.0; k * k];
    for (x, w) in particles.positions().iter().zip(w_bar.values()) {
        for i in 0..k {
            for j in 0..k {
                covariance[i * k + j] += w * (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    let m = standard.len();
    IterationRecord {
        iteration,
        m,
        ness_standard: ness(w_std),
        ness_transformed: ness(w_bar),
        max_weight_standard: max_weight(w_std),
        transform_applied,
        mean,
        covariance,
        log_evidence: log_norm - (m as f64).ln(),
        resampled_mean: resampled.mean(),
        resampled_variance: resampled.variance(),
        zero_weights: standard.values().iter().filter(|v| **v == f64::NEG_INFINITY).count(),
        wall_time: started.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StreamRng;
    use crate::weights::GammaSchedule;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Prior N(0, 1), one observation y ~ N(θ, 1); posterior N(y/2, 1/2).
    struct Conjugate {
        y: f64,
    }

    impl TargetModel for Conjugate {
        fn dim(&self) -> usize {
            1
        }
        fn sample_prior_one(&self, rng: &mut StreamRng) -> Vec<f64> {
            vec![rng.sample(StandardNormal)]
        }
        fn log_prior(&self, theta: &[f64]) -> f64 {
            -0.5 * theta[0] * theta[0] - 0.5 * (2.0 * std::f64::consts::PI).ln()
        }
        fn log_likelihood(&self, theta: &[f64], _: &mut StreamRng) -> f64 {
            let d = self.y - theta[0];
            -0.5 * d * d - 0.5 * (2.0 * std::f64::consts::PI).ln()
        }
    }

    /// Likelihood that is zero everywhere.
    struct Impossible;

    impl TargetModel for Impossible {
        fn dim(&self) -> usize {
            1
        }
        fn sample_prior_one(&self, rng: &mut StreamRng) -> Vec<f64> {
            vec![rng.random()]
        }
        fn log_prior(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn log_likelihood(&self, _: &[f64], _: &mut StreamRng) -> f64 {
            f64::NEG_INFINITY
        }
    }

    #[test]
    fn identity_transform_recovers_conjugate_mean() {
        let model = Conjugate { y: 1.0 };
        let m = 10_000;
        let cfg = NpmcConfig::new(m, 3, WeightTransform::Identity, 17);
        let out = npmc_run(&model, &cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        let err = (out.last().mean[0] - 0.5).abs();
        let se = (0.5f64).sqrt() / (m as f64).sqrt();
        assert!(err < 3.0 * se, "error {err} vs se {se}");
        assert!(!out.records.iter().any(|r| r.transform_applied));
    }

    #[test]
    fn clip_to_m_minus_one_flattens_first_iteration() {
        let model = Conjugate { y: 1.0 };
        let m = 200;
        let cfg = NpmcConfig::new(m, 1, WeightTransform::ClipHard { clip_count: m - 1 }, 3);
        let out = npmc_run(&model, &cfg).unwrap();
        let first = &out.records[0];
        assert!(first.ness_transformed >= (m as f64 - 1.0) / m as f64 * 0.9);
        assert!(first.ness_transformed >= first.ness_standard);
    }

    #[test]
    fn all_zero_weights_abort_with_iteration() {
        let cfg = NpmcConfig::new(10, 2, WeightTransform::Identity, 0);
        assert_eq!(
            npmc_run(&Impossible, &cfg).unwrap_err(),
            Error::Degenerate { iteration: 0 }
        );
    }

    #[test]
    fn modified_thresholds_bracket_plain_runs() {
        let model = Conjugate { y: 4.0 };
        let m = 300;
        let clip = WeightTransform::ClipHard { clip_count: 60 };

        let never = NpmcConfig::new(m, 3, clip.clone(), 8).with_min_eff(1.0);
        let identity = NpmcConfig::new(m, 3, WeightTransform::Identity, 8);
        let a = modified_npmc_run(&model, &never).unwrap();
        let b = npmc_run(&model, &identity).unwrap();
        assert!(a.records.iter().all(|r| !r.transform_applied));
        assert!(a.records.iter().zip(&b.records).all(|(x, y)| x.same_trace(y)));

        let always = NpmcConfig::new(m, 3, clip.clone(), 8).with_min_eff(m as f64);
        let plain = NpmcConfig::new(m, 3, clip, 8);
        let c = modified_npmc_run(&model, &always).unwrap();
        let d = npmc_run(&model, &plain).unwrap();
        assert!(c.records.iter().zip(&d.records).all(|(x, y)| x.same_trace(y)));
    }

    #[test]
    fn modified_requires_threshold() {
        let cfg = NpmcConfig::new(10, 1, WeightTransform::Identity, 0);
        assert!(modified_npmc_run(&Conjugate { y: 0.0 }, &cfg).is_err());
    }

    #[test]
    fn transformed_ness_never_below_standard() {
        let model = Conjugate { y: 6.0 };
        for transform in [
            WeightTransform::ClipHard { clip_count: 20 },
            WeightTransform::Temper {
                gamma: GammaSchedule::Sigmoid { midpoint: 2.0 },
            },
            WeightTransform::ClipSoft {
                clip_count: 20,
                beta: crate::weights::BetaSchedule::ClipThreshold,
            },
        ] {
            let out = npmc_run(&model, &NpmcConfig::new(100, 4, transform, 2)).unwrap();
            for r in &out.records {
                assert!(r.ness_transformed >= r.ness_standard - 1e-12);
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let model = Conjugate { y: 0.0 };
        assert!(npmc_run(&model, &NpmcConfig::new(1, 1, WeightTransform::Identity, 0)).is_err());
        assert!(npmc_run(&model, &NpmcConfig::new(10, 0, WeightTransform::Identity, 0)).is_err());
        let bad_clip = NpmcConfig::new(10, 1, WeightTransform::ClipHard { clip_count: 10 }, 0);
        assert!(npmc_run(&model, &bad_clip).is_err());
        let bad_eff = NpmcConfig::new(10, 1, WeightTransform::Identity, 0).with_min_eff(11.0);
        assert!(modified_npmc_run(&model, &bad_eff).is_err());
    }
}
