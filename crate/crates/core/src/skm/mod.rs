//! Lotka-Volterra stochastic kinetic model.
//!
//! Three reactions act on `x = (prey, predators)`:
//!
//! | k | reaction       | hazard                  | change   |
//! |---|----------------|-------------------------|----------|
//! | 1 | prey birth     | `theta_1 x_1`           | `(+1, 0)`  |
//! | 2 | predation      | `theta_2 x_1 x_2`       | `(-1, +1)` |
//! | 3 | predator death | `theta_3 x_2`           | `(0, -1)`  |
//!
//! Rates are inferred from noisy snapshots `y_n = x(n delta) + u_n` with a
//! particle-filter likelihood inside NPMC.

mod model;
mod observe;
mod pf;
mod sim;

pub use model::{skm_npmc_run, SkmModel};
pub use observe::{observe, SkmObservations};
pub use pf::{pf_loglik, PfEstimate};
pub use sim::{gillespie_simulate, rate_terms, SkmTrajectory, SufficientStats, DEFAULT_MAX_EVENTS, STOICHIOMETRY};

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

/// Reaction rate constants `theta_1..theta_3`.
///
/// Zero rates are admitted so that sub-networks (pure birth, pure death)
/// can be simulated; inference always uses strictly positive rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvRates {
    theta: [f64; 3],
}

impl LvRates {
    pub fn new(theta: [f64; 3]) -> Result<Self> {
        if theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(invalid("theta", format!("{theta:?} must be finite and non-negative")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> [f64; 3] {
        self.theta
    }
}

/// Independent `Gamma(a_k, b_k)` components in shape-rate form (mean `a/b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl GammaPrior {
    pub fn new(a: [f64; 3], b: [f64; 3]) -> Result<Self> {
        if a.iter().chain(&b).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("gamma_prior", "shapes and rates must be positive and finite"));
        }
        Ok(Self { a, b })
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.a[0] / self.b[0], self.a[1] / self.b[1], self.a[2] / self.b[2]]
    }

    pub fn std(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.a[k].sqrt() / self.b[k])
    }

    /// Joint log-density; `-inf` unless every component is positive.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != 3 || theta.iter().any(|t| !(*t > 0.0)) {
            return f64::NEG_INFINITY;
        }
        (0..3)
            .map(|k| {
                let (a, b) = (self.a[k], self.b[k]);
                a * b.ln() - ln_gamma(a) + (a - 1.0) * theta[k].ln() - b * theta[k]
            })
            .sum()
    }
}

/// Moment-matched Gamma prior: `a = (mean/std)^2`, `b = mean/std^2`.
pub fn prior_from_spec(mean: [f64; 3], std: [f64; 3]) -> Result<GammaPrior> {
    if mean.iter().chain(&std).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("prior", "means and standard deviations must be positive"));
    }
    GammaPrior::new(
        [0, 1, 2].map(|k| (mean[k] / std[k]).powi(2)),
        [0, 1, 2].map(|k| mean[k] / (std[k] * std[k])),
    )
}

/// `sum_k r_k log theta_k - theta_k int g_k dt`, or `-inf` if any rate is not positive.
pub fn complete_data_loglik(traj: &SkmTrajectory, theta: &[f64; 3]) -> f64 {
    complete_data_loglik_stats(&SufficientStats {
        counts: traj.reaction_counts(),
        integrated: traj.integrated_hazards(),
    }, theta)
}

pub fn complete_data_loglik_stats(stats: &SufficientStats, theta: &[f64; 3]) -> f64 {
    if theta.iter().any(|t| !(*t > 0.0)) {
        return f64::NEG_INFINITY;
    }
    (0..3)
        .map(|k| stats.counts[k] as f64 * theta[k].ln() - theta[k] * stats.integrated[k])
        .sum()
}

/// Conjugate update `(a_k + r_k, b_k + int g_k dt)`.
pub fn gamma_posterior_complete(traj: &SkmTrajectory, prior: &GammaPrior) -> GammaPrior {
    let r = traj.reaction_counts();
    let g = traj.integrated_hazards();
    GammaPrior {
        a: [0, 1, 2].map(|k| prior.a[k] + r[k] as f64),
        b: [0, 1, 2].map(|k| prior.b[k] + g[k]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use approx::assert_relative_eq;

    #[test]
    fn prior_from_spec_examples() {
        let p = prior_from_spec([0.5, 0.0025, 0.3], [1.25, 0.0065, 0.77]).unwrap();
        assert_relative_eq!(p.a[0], 0.16, max_relative = 1e-12);
        assert_relative_eq!(p.b[0], 0.32, max_relative = 1e-12);
        assert_relative_eq!(p.a[1], 0.147_929, max_relative = 1e-5);
        assert_relative_eq!(p.b[1], 59.171_6, max_relative = 1e-5);
        let cv2 = [0, 1, 2].map(|k| (p.std()[k] / p.mean()[k]).powi(2));
        assert_relative_eq!(cv2[0], 6.25, max_relative = 1e-12);
        assert_relative_eq!(cv2[1], 6.76, max_relative = 1e-12);
        assert_relative_eq!(cv2[2], 6.588, max_relative = 1e-3);
        assert!(prior_from_spec([0.5, 0.0, 0.3], [1.0; 3]).is_err());
    }

    #[test]
    fn zero_event_loglik() {
        let x0 = [71, 79];
        let tr = SkmTrajectory::new(x0, 40.0, vec![], vec![]).unwrap();
        let theta = [0.5, 0.0025, 0.3];
        let g = rate_terms(x0);
        let expected = -(0..3).map(|k| theta[k] * g[k] * 40.0).sum::<f64>();
        assert_relative_eq!(complete_data_loglik(&tr, &theta), expected, max_relative = 1e-14);
        assert_eq!(complete_data_loglik(&tr, &[0.5, 0.0, 0.3]), f64::NEG_INFINITY);
    }

    #[test]
    fn loglik_is_additive_over_time() {
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let theta = [0.4, 0.003, 0.25];
        for s in 0..10 {
            let tr = gillespie_simulate(&rates, [71, 79], 40.0, &mut RngStream::root(s).rng(), DEFAULT_MAX_EVENTS).unwrap();
            let whole = complete_data_loglik(&tr, &theta);
            let halves = complete_data_loglik_stats(&tr.stats(0.0, 20.0), &theta)
                + complete_data_loglik_stats(&tr.stats(20.0, 40.0), &theta);
            assert_relative_eq!(whole, halves, max_relative = 1e-10);
        }
    }

    #[test]
    fn loglik_peaks_at_count_ratio() {
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let tr = gillespie_simulate(&rates, [71, 79], 40.0, &mut RngStream::root(7).rng(), DEFAULT_MAX_EVENTS).unwrap();
        let r = tr.reaction_counts();
        let g = tr.integrated_hazards();
        let hat = [0, 1, 2].map(|k| r[k] as f64 / g[k]);
        let best = complete_data_loglik(&tr, &hat);
        for k in 0..3 {
            for f in [0.9, 0.99, 1.01, 1.1] {
                let mut t = hat;
                t[k] *= f;
                assert!(complete_data_loglik(&tr, &t) < best);
            }
        }
    }

    #[test]
    fn conjugate_update_examples() {
        let prior = GammaPrior::new([1.0; 3], [1.0; 3]).unwrap();
        let empty = SkmTrajectory::new([0, 0], 40.0, vec![], vec![]).unwrap();
        assert_eq!(gamma_posterior_complete(&empty, &prior), prior);

        // Three prey births from (1, 0) over [0, 4]: r = (3, 0, 0).
        let tr = SkmTrajectory::new([1, 0], 4.0, vec![1.0, 2.0, 3.0], vec![[2, 0], [3, 0], [4, 0]]).unwrap();
        let post = gamma_posterior_complete(&tr, &prior);
        assert_eq!(post.a, [4.0, 1.0, 1.0]);
        assert_eq!(post.b, [1.0 + 10.0, 1.0, 1.0]);

        let vague = GammaPrior::new([1e-12; 3], [1e-12; 3]).unwrap();
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let tr = gillespie_simulate(&rates, [71, 79], 40.0, &mut RngStream::root(8).rng(), DEFAULT_MAX_EVENTS).unwrap();
        let post = gamma_posterior_complete(&tr, &vague);
        for k in 0..3 {
            let mle = tr.reaction_counts()[k] as f64 / tr.integrated_hazards()[k];
            assert_relative_eq!(post.mean()[k], mle, max_relative = 1e-9);
        }
    }

    #[test]
    fn gamma_posterior_normalizes_numerically() {
        // The complete-data likelihood times the prior, integrated over a grid,
        // matches the Gamma normalizer implied by the conjugate update.
        let prior = prior_from_spec([0.5, 0.0025, 0.3], [1.25, 0.0065, 0.77]).unwrap();
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let tr = gillespie_simulate(&rates, [71, 79], 40.0, &mut RngStream::root(9).rng(), DEFAULT_MAX_EVENTS).unwrap();
        let post = gamma_posterior_complete(&tr, &prior);
        let r = tr.reaction_counts();
        let g = tr.integrated_hazards();
        for k in 0..3 {
            let (a, b) = (prior.a[k], prior.b[k]);
            let unnorm = |t: f64| {
                (a * b.ln() - ln_gamma(a) + (a - 1.0) * t.ln() - b * t + r[k] as f64 * t.ln() - t * g[k]).exp()
            };
            let (pa, pb) = (post.a[k], post.b[k]);
            let mean = pa / pb;
            let sd = pa.sqrt() / pb;
            let (lo, hi) = ((mean - 12.0 * sd).max(0.0), mean + 12.0 * sd);
            let n = 200_000;
            let h = (hi - lo) / n as f64;
            let mut integral = 0.0;
            for i in 0..=n {
                let t = lo + h * i as f64;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                if t > 0.0 {
                    integral += w * unnorm(t);
                }
            }
            integral *= h / 3.0;
            let closed = (a * b.ln() - ln_gamma(a) + ln_gamma(pa) - pa * pb.ln()).exp();
            assert_relative_eq!(integral, closed, max_relative = 1e-6);
        }
    }
}
