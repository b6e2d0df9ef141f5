use rayon::prelude::*;

use super::TargetModel;
use crate::error::{invalid, Result};
use crate::sampling::RngStream;
use crate::weights::{clip_hard, log_sum_exp, LogWeights};

/// Mean absolute errors over repetitions for one test function and one `M`.
///
/// `bar` is the transformed-weight estimate, `std` plain self-normalized
/// importance sampling on the same draws, `bridge` the transformed weights
/// over the standard normalizer, `truth` the exact integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub function: usize,
    pub m: usize,
    /// `None` for the identity transform.
    pub clip_count: Option<usize>,
    pub err_bar_vs_std: f64,
    pub err_bar_vs_bridge: f64,
    pub err_bridge_vs_std: f64,
    pub err_bar_vs_truth: f64,
    pub err_std_vs_truth: f64,
    /// Repetitions in which either triangle inequality failed beyond rounding.
    pub triangle_violations: usize,
}

/// Importance sampling from the prior of `model` (weights equal to the
/// likelihood) with hard clipping of the `clip_rule(M)` largest weights, or
/// no transform when `clip_rule` is `None`. Repetition `r` at sample size
/// `M` uses stream `stream.child(M).child(r)`, so runs with and without
/// clipping see the same draws.
pub fn convergence_error_curves<T, F>(
    model: &T,
    functions: &[F],
    truths: &[f64],
    m_grid: &[usize],
    clip_rule: Option<&(dyn Fn(usize) -> usize + Sync)>,
    repetitions: usize,
    stream: RngStream,
) -> Result<Vec<ConvergenceRow>>
where
    T: TargetModel + ?Sized,
    F: Fn(&[f64]) -> f64 + Sync,
{
    if functions.len() != truths.len() {
        return Err(invalid("truths", "one reference value per test function"));
    }
    if repetitions == 0 {
        return Err(invalid("repetitions", "need at least one"));
    }
    let mut rows = Vec::new();
    for &m in m_grid {
        let clip_count = clip_rule.map(|rule| rule(m));
        let per_rep: Vec<Vec<[f64; 4]>> = (0..repetitions as u64)
            .into_par_iter()
            .map(|r| -> Result<Vec<[f64; 4]>> {
                let s = stream.child(m as u64).child(r);
                let positions = model.sample_prior(m, s)?.positions().to_vec();
                let lw: Vec<f64> = positions
                    .iter()
                    .enumerate()
                    .map(|(i, x)| model.log_likelihood(x, &mut s.child(m as u64 + i as u64).rng()))
                    .collect();
                let standard = LogWeights::new(lw)?;
                let transformed = match clip_count {
                    Some(c) => clip_hard(&standard, c)?,
                    None => standard.clone(),
                };
                let log_std = log_sum_exp(standard.values());
                let log_bar = log_sum_exp(transformed.values());
                functions
                    .iter()
                    .zip(truths)
                    .map(|(f, truth)| {
                        let fx: Vec<f64> = positions.iter().map(|x| f(x)).collect();
                        let weighted = |lw: &LogWeights, log_norm: f64| -> f64 {
                            lw.values()
                                .iter()
                                .zip(&fx)
                                .filter(|(w, _)| **w > f64::NEG_INFINITY)
                                .map(|(w, v)| (w - log_norm).exp() * v)
                                .sum()
                        };
                        let std_est = weighted(&standard, log_std);
                        let bar = weighted(&transformed, log_bar);
                        let bridge = weighted(&transformed, log_std);
                        Ok([std_est, bar, bridge, *truth])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        for (fi, _) in functions.iter().enumerate() {
            let mut sums = [0.0; 5];
            let mut violations = 0;
            for rep in &per_rep {
                let [std_est, bar, bridge, truth] = rep[fi];
                let bar_std = (bar - std_est).abs();
                let bar_bridge = (bar - bridge).abs();
                let bridge_std = (bridge - std_est).abs();
                let bar_truth = (bar - truth).abs();
                let std_truth = (std_est - truth).abs();
                let slack = 4.0 * f64::EPSILON * (bar.abs() + bridge.abs() + std_est.abs() + truth.abs());
                if bar_std > bar_bridge + bridge_std + slack || bar_truth > bar_std + std_truth + slack {
                    violations += 1;
                }
                for (acc, v) in sums.iter_mut().zip([bar_std, bar_bridge, bridge_std, bar_truth, std_truth]) {
                    *acc += v;
                }
            }
            let n = repetitions as f64;
            rows.push(ConvergenceRow {
                function: fi,
                m,
                clip_count,
                err_bar_vs_std: sums[0] / n,
                err_bar_vs_bridge: sums[1] / n,
                err_bridge_vs_std: sums[2] / n,
                err_bar_vs_truth: sums[3] / n,
                err_std_vs_truth: sums[4] / n,
                triangle_violations: violations,
            });
        }
    }
    Ok(rows)
}
