use crate::error::{Error, Result};
use crate::sampling::ParticleSet;
use crate::weights::{log_sum_exp, LogWeights};

/// `sum_i w_i f(theta_i)` over a weighted set.
pub fn estimate<F>(f: F, ps: &ParticleSet) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let w = ps.weights().ok_or(Error::Unweighted)?;
    Ok(ps
        .positions()
        .iter()
        .zip(w.values())
        .filter(|(_, w)| **w > 0.0)
        .map(|(x, w)| w * f(x))
        .sum())
}

/// Integral under the bridge measure: transformed unnormalized weights
/// divided by the sum of the standard unnormalized weights.
pub fn bridge_estimate<F>(
    f: F,
    positions: &[Vec<f64>],
    standard: &LogWeights,
    transformed: &LogWeights,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if positions.len() != standard.len() || transformed.len() != standard.len() {
        return Err(Error::DimensionMismatch {
            expected: positions.len(),
            got: standard.len().min(transformed.len()),
        });
    }
    let log_total = log_sum_exp(standard.values());
    if log_total == f64::NEG_INFINITY {
        return Err(Error::AllWeightsZero);
    }
    Ok(positions
        .iter()
        .zip(transformed.values())
        .filter(|(_, lw)| **lw > f64::NEG_INFINITY)
        .map(|(x, lw)| (lw - log_total).exp() * f(x))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{clip_hard, normalize, NormalizedWeights};
    use approx::assert_abs_diff_eq;

    fn weighted(xs: &[f64], ws: &[f64]) -> ParticleSet {
        ParticleSet::weighted(
            xs.iter().map(|x| vec![*x]).collect(),
            NormalizedWeights::new(ws.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn estimate_examples() {
        let ps = weighted(&[-1.0, 2.0, 5.0], &[0.3, 0.5, 0.2]);
        assert_abs_diff_eq!(estimate(|_| 1.0, &ps).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            estimate(|x| if x[0] == -1.0 { 1.0 } else { 0.0 }, &ps).unwrap(),
            0.3,
            epsilon = 1e-15
        );
        let two = weighted(&[0.0, 4.0], &[0.25, 0.75]);
        assert_eq!(estimate(|x| x[0], &two).unwrap(), 3.0);
    }

    #[test]
    fn estimate_requires_weights() {
        let ps = ParticleSet::unweighted(vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(estimate(|x| x[0], &ps).unwrap_err(), Error::Unweighted);
    }

    #[test]
    fn bridge_identity_matches_standard_estimate() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.7 - 1.0]).collect();
        let lw = LogWeights::new(vec![-3.0, 0.5, -700.0, 2.0, -1.0, 0.0]).unwrap();
        let (w, _) = normalize(&lw).unwrap();
        let ps = ParticleSet::weighted(xs.clone(), w).unwrap();
        let f = |x: &[f64]| x[0].sin() + 2.0;
        let std_est = estimate(f, &ps).unwrap();
        let bridge = bridge_estimate(f, &xs, &lw, &lw).unwrap();
        assert!(((bridge - std_est) / std_est).abs() < 1e-12);
    }

    #[test]
    fn bridge_total_mass_shrinks_under_clipping() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let lw = LogWeights::new(vec![1.0, 4.0, -2.0, 3.0, 0.0]).unwrap();
        let clipped = clip_hard(&lw, 2).unwrap();
        let mass = bridge_estimate(|_| 1.0, &xs, &lw, &clipped).unwrap();
        assert!(mass <= 1.0);
    }

    #[test]
    fn bridge_two_particle_case() {
        let xs = vec![vec![1.0], vec![0.0]];
        let lw = LogWeights::new(vec![10f64.ln(), 0.0]).unwrap();
        let clipped = clip_hard(&lw, 1).unwrap();
        let v = bridge_estimate(|x| x[0], &xs, &lw, &clipped).unwrap();
        assert_abs_diff_eq!(v, 10.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn bridge_all_zero_standard_weights() {
        let xs = vec![vec![1.0], vec![0.0]];
        let zero = LogWeights::new(vec![f64::NEG_INFINITY; 2]).unwrap();
        assert_eq!(
            bridge_estimate(|_| 1.0, &xs, &zero, &zero).unwrap_err(),
            Error::AllWeightsZero
        );
    }
}
