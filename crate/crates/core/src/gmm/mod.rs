//! Two-component Gaussian mixture with unknown component means.
//!
//! `y_n ~ rho N(theta_1, sigma2) + (1 - rho) N(theta_2, sigma2)` with
//! independent `N(nu, sigma2 / lambda)` priors on both means.

mod degeneracy;
mod oracle;

pub use degeneracy::{degeneracy_study, DegeneracyCell};
pub use oracle::{grid_posterior_oracle, Grid, OracleSummary};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::pmc::TargetModel;
use crate::sampling::{RngStream, StreamRng};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmSpec {
    pub rho: f64,
    pub sigma2: f64,
    pub nu: f64,
    pub lambda: f64,
    pub theta_true: [f64; 2],
}

impl GmmSpec {
    /// `rho = 0.2`, `sigma2 = 1`, `nu = 1`, `lambda = 0.1`, `theta = (0, 2)`.
    pub fn benchmark() -> Self {
        Self {
            rho: 0.2,
            sigma2: 1.0,
            nu: 1.0,
            lambda: 0.1,
            theta_true: [0.0, 2.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid("rho", format!("{} outside (0, 1)", self.rho)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(invalid("sigma2", "must be positive"));
        }
        if !(self.lambda > 0.0) {
            return Err(invalid("lambda", "must be positive"));
        }
        if !self.nu.is_finite() || self.theta_true.iter().any(|t| !t.is_finite()) {
            return Err(invalid("theta_true", "must be finite"));
        }
        Ok(())
    }

    /// Prior variance of each component mean.
    pub fn prior_variance(&self) -> f64 {
        self.sigma2 / self.lambda
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmData {
    pub y: Vec<f64>,
}

impl GmmData {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("y", "non-finite observation"));
        }
        Ok(Self { y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

pub fn gmm_generate(spec: &GmmSpec, n: usize, stream: RngStream) -> Result<GmmData> {
    spec.validate()?;
    if n < 1 {
        return Err(invalid("n", "need at least one observation"));
    }
    let mut rng = stream.rng();
    let sd = spec.sigma2.sqrt();
    let y = (0..n)
        .map(|_| {
            let mean = if rng.random::<f64>() < spec.rho {
                spec.theta_true[0]
            } else {
                spec.theta_true[1]
            };
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        })
        .collect();
    GmmData::new(y)
}

/// `sum_n log(rho N(y_n; theta_1, s2) + (1 - rho) N(y_n; theta_2, s2))`.
pub fn gmm_loglik(theta: &[f64], data: &GmmData, spec: &GmmSpec) -> f64 {
    let (ln_rho, ln_rest) = (spec.rho.ln(), (1.0 - spec.rho).ln());
    let inv2s = 0.5 / spec.sigma2;
    let sum: f64 = data
        .y
        .iter()
        .map(|y| {
            let a = ln_rho - (y - theta[0]) * (y - theta[0]) * inv2s;
            let b = ln_rest - (y - theta[1]) * (y - theta[1]) * inv2s;
            log_add_exp(a, b)
        })
        .sum();
    sum - 0.5 * data.len() as f64 * (LN_2PI + spec.sigma2.ln())
}

pub fn gmm_log_prior(theta: &[f64], spec: &GmmSpec) -> f64 {
    let v = spec.prior_variance();
    theta
        .iter()
        .map(|t| -0.5 * (LN_2PI + v.ln()) - 0.5 * (t - spec.nu) * (t - spec.nu) / v)
        .sum()
}

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Posterior of the two component means given a dataset.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub spec: GmmSpec,
    pub data: GmmData,
}

impl GmmModel {
    pub fn new(spec: GmmSpec, data: GmmData) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, data })
    }
}

impl TargetModel for GmmModel {
    fn dim(&self) -> usize {
        2
    }

    fn sample_prior_one(&self, rng: &mut StreamRng) -> Vec<f64> {
        let sd = self.spec.prior_variance().sqrt();
        (0..2)
            .map(|_| self.spec.nu + sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        gmm_log_prior(theta, &self.spec)
    }

    fn log_likelihood(&self, theta: &[f64], _: &mut StreamRng) -> f64 {
        gmm_loglik(theta, &self.data, &self.spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
        (-(y - mean) * (y - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    #[test]
    fn generate_single_component_limit() {
        let spec = GmmSpec {
            rho: 1.0 - 1e-12,
            theta_true: [-3.0, 5.0],
            ..GmmSpec::benchmark()
        };
        let n = 20_000;
        let d = gmm_generate(&spec, n, RngStream::root(1)).unwrap();
        let mean = d.y.iter().sum::<f64>() / n as f64;
        assert!((mean + 3.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn generate_collapsed_components() {
        let spec = GmmSpec {
            theta_true: [1.5, 1.5],
            ..GmmSpec::benchmark()
        };
        let n = 20_000;
        let d = gmm_generate(&spec, n, RngStream::root(2)).unwrap();
        let mean = d.y.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn generate_mixture_mean() {
        let d = gmm_generate(&GmmSpec::benchmark(), 100_000, RngStream::root(3)).unwrap();
        let mean = d.y.iter().sum::<f64>() / d.len() as f64;
        assert!((mean - 1.6).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn generate_rejects_empty() {
        assert!(gmm_generate(&GmmSpec::benchmark(), 0, RngStream::root(0)).is_err());
    }

    #[test]
    fn loglik_collapse_and_single_term() {
        let spec = GmmSpec::benchmark();
        let data = GmmData::new(vec![-0.4, 1.2, 3.3]).unwrap();
        let t = 0.7;
        let expected: f64 = data.y.iter().map(|y| normal_pdf(*y, t, 1.0).ln()).sum();
        assert_abs_diff_eq!(gmm_loglik(&[t, t], &data, &spec), expected, epsilon = 1e-12);

        let one = GmmData::new(vec![0.0]).unwrap();
        let direct = (0.2 * normal_pdf(0.0, 0.0, 1.0) + 0.8 * normal_pdf(0.0, 2.0, 1.0)).ln();
        assert_abs_diff_eq!(gmm_loglik(&[0.0, 2.0], &one, &spec), direct, epsilon = 1e-14);
    }

    #[test]
    fn loglik_label_swap() {
        let spec = GmmSpec::benchmark();
        let swapped = GmmSpec {
            rho: 1.0 - spec.rho,
            ..spec
        };
        let data = gmm_generate(&spec, 50, RngStream::root(4)).unwrap();
        let a = gmm_loglik(&[0.3, 1.9], &data, &spec);
        let b = gmm_loglik(&[1.9, 0.3], &data, &swapped);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn prior_examples() {
        let spec = GmmSpec::benchmark();
        let v = spec.prior_variance();
        assert_abs_diff_eq!(
            gmm_log_prior(&[spec.nu, spec.nu], &spec),
            2.0 * (-0.5 * (2.0 * std::f64::consts::PI * v).ln()),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            gmm_log_prior(&[1.0, 1.0], &spec),
            -(2.0 * std::f64::consts::PI * 10.0).ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            gmm_log_prior(&[1.0 + 2.5, 1.0 - 0.5], &spec),
            gmm_log_prior(&[1.0 - 2.5, 1.0 + 0.5], &spec),
            epsilon = 1e-14
        );
    }
}
