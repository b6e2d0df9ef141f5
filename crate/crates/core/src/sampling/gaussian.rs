use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ParticleSet, RngStream};
use crate::error::{invalid, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Multivariate normal proposal with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProposal {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    cholesky: DMatrix<f64>,
    log_norm: f64,
    jitter: f64,
}

impl GaussianProposal {
    /// Builds the proposal, adding `eps * I` with
    /// `eps = 1e-9 * max(1, trace / K)` if the factorization fails and
    /// retrying once with `1e-6` in place of `1e-9`.
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let k = mean.len();
        if k == 0 {
            return Err(invalid("mean", "empty"));
        }
        if covariance.nrows() != k || covariance.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: covariance.nrows(),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("covariance", "non-finite entry"));
        }
        let scale = covariance.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if (&covariance - covariance.transpose()).amax() > 1e-10 * scale {
            return Err(invalid("covariance", "not symmetric"));
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;

        let level = (covariance.trace() / k as f64).max(1.0);
        for jitter in [0.0, 1e-9 * level, 1e-6 * level] {
            let c = &covariance + DMatrix::identity(k, k) * jitter;
            if let Some(l) = factor(&c) {
                let log_det_half: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
                return Ok(Self {
                    mean: DVector::from_vec(mean),
                    covariance: c,
                    log_norm: -0.5 * k as f64 * LN_2PI - log_det_half,
                    cholesky: l,
                    jitter,
                });
            }
        }
        Err(Error::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    /// Covariance including any jitter that was added.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// Diagonal regularization added at construction, zero if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `mean + L z` with `z` standard normal.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample(StandardNormal)));
        (&self.mean + &self.cholesky * z).as_slice().to_vec()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        // Forward substitution L z = x - mean.
        let k = self.dim();
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut acc = x[i] - self.mean[i];
            for (j, zj) in z.iter().enumerate().take(i) {
                acc -= self.cholesky[(i, j)] * zj;
            }
            z[i] = acc / self.cholesky[(i, i)];
        }
        Ok(self.log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>())
    }
}

/// Lower Cholesky factor, rejecting numerically singular pivots.
fn factor(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = c.clone().cholesky()?.unpack();
    let max_diag = c.diagonal().amax();
    let min_pivot = l.diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    (min_pivot > 1e-14 * max_diag && min_pivot.is_finite()).then_some(l)
}

/// Moment-matched proposal from an unweighted set: sample mean and the
/// `1/M` covariance.
pub fn fit_gaussian_proposal(ps: &ParticleSet) -> Result<GaussianProposal> {
    if ps.is_weighted() {
        return Err(invalid("particles", "expected an unweighted (resampled) set"));
    }
    let k = ps.dim();
    let m = ps.len() as f64;
    let mean = ps.mean();
    let mut cov = DMatrix::zeros(k, k);
    for p in ps.positions() {
        for i in 0..k {
            let di = p[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            let v = cov[(i, j)] / m;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    GaussianProposal::new(mean, cov)
}

/// `m` independent draws; particle `i` uses sub-stream `i`.
pub fn sample_proposal(p: &GaussianProposal, m: usize, stream: RngStream) -> Result<ParticleSet> {
    let positions = (0..m as u64).map(|i| p.sample_one(&mut stream.child(i).rng())).collect();
    ParticleSet::unweighted(positions)
}

pub fn log_mvn_density(p: &GaussianProposal, x: &[f64]) -> Result<f64> {
    p.log_density(x)
}
