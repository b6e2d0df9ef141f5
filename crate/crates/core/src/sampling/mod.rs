//! Random streams, particle sets, resampling and the Gaussian proposal.

mod gaussian;
mod resample;
mod rng;

pub use gaussian::{fit_gaussian_proposal, log_mvn_density, sample_proposal, GaussianProposal};
pub use resample::{multinomial_indices, multinomial_resample};
pub(crate) use resample::resample_with_indices;
pub use rng::{RngStream, StreamRng};

use crate::error::{invalid, Error, Result};
use crate::weights::NormalizedWeights;

/// `M` particle positions in `R^K`, optionally weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    dim: usize,
    positions: Vec<Vec<f64>>,
    weights: Option<NormalizedWeights>,
}

impl ParticleSet {
    pub fn unweighted(positions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = validate_positions(&positions)?;
        Ok(Self {
            dim,
            positions,
            weights: None,
        })
    }

    pub fn weighted(positions: Vec<Vec<f64>>, weights: NormalizedWeights) -> Result<Self> {
        let dim = validate_positions(&positions)?;
        if weights.len() != positions.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                got: weights.len(),
            });
        }
        Ok(Self {
            dim,
            positions,
            weights: Some(weights),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn weights(&self) -> Option<&NormalizedWeights> {
        self.weights.as_ref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Per-coordinate mean with uniform `1/M` weights.
    pub fn mean(&self) -> Vec<f64> {
        let m = self.len() as f64;
        let mut mean = vec![0.0; self.dim];
        for p in &self.positions {
            for (acc, x) in mean.iter_mut().zip(p) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= m);
        mean
    }

    /// Per-coordinate population (`1/M`) variance.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let m = self.len() as f64;
        let mut var = vec![0.0; self.dim];
        for p in &self.positions {
            for ((acc, x), mu) in var.iter_mut().zip(p).zip(&mean) {
                *acc += (x - mu) * (x - mu);
            }
        }
        var.iter_mut().for_each(|v| *v /= m);
        var
    }
}

fn validate_positions(positions: &[Vec<f64>]) -> Result<usize> {
    if positions.len() < 2 {
        return Err(invalid("particles", format!("need M >= 2, got {}", positions.len())));
    }
    let dim = positions[0].len();
    if dim == 0 {
        return Err(invalid("particles", "zero-dimensional positions"));
    }
    for p in positions {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(invalid("particles", "non-finite position"));
        }
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_ragged_sets() {
        assert!(ParticleSet::unweighted(vec![vec![0.0]]).is_err());
        assert!(ParticleSet::unweighted(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(ParticleSet::unweighted(vec![vec![0.0], vec![f64::NAN]]).is_err());
        let w = NormalizedWeights::uniform(3);
        assert!(ParticleSet::weighted(vec![vec![0.0], vec![1.0]], w).is_err());
    }

    #[test]
    fn moments() {
        let ps = ParticleSet::unweighted(vec![vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(ps.mean(), vec![1.0, 1.0]);
        assert_eq!(ps.variance(), vec![1.0, 0.0]);
    }
}
