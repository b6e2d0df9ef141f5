use rand::Rng;

use super::{ParticleSet, RngStream};
use crate::error::{Error, Result};
use crate::weights::NormalizedWeights;

/// `m` independent categorical draws from `weights`.
pub fn multinomial_indices<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    // Last index with positive weight absorbs round-off at the top of the cdf.
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1);
    (0..m)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cdf.partition_point(|c| *c <= u).min(last)
        })
        .collect()
}

/// Multinomial resampling of a weighted set into an unweighted one of the
/// same size.
pub fn multinomial_resample(ps: &ParticleSet, stream: RngStream) -> Result<ParticleSet> {
    let weights = ps.weights().ok_or(Error::Unweighted)?;
    let idx = multinomial_indices(weights.values(), ps.len(), &mut stream.rng());
    let positions = idx.iter().map(|&i| ps.positions()[i].clone()).collect();
    ParticleSet::unweighted(positions)
}

/// Resampled set paired with the originating indices.
pub(crate) fn resample_with_indices(
    positions: &[Vec<f64>],
    weights: &NormalizedWeights,
    stream: RngStream,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let idx = multinomial_indices(weights.values(), positions.len(), &mut stream.rng());
    let out = idx.iter().map(|&i| positions[i].clone()).collect();
    (out, idx)
}
