//! Estimation error of sample sets and cross-run summaries.

use crate::error::{invalid, Error, Result};
use crate::pmc::IterationRecord;
use crate::sampling::ParticleSet;

/// `(1/M) sum_i (theta_k^(i) - theta_k)^2` over the positions of `samples`,
/// ignoring any weights.
pub fn mse(samples: &ParticleSet, theta_true: &[f64], k: usize) -> Result<f64> {
    check_dim(samples.dim(), theta_true.len())?;
    if k >= samples.dim() {
        return Err(invalid("k", format!("coordinate {k} out of range")));
    }
    let t = theta_true[k];
    let sum: f64 = samples.positions().iter().map(|x| (x[k] - t) * (x[k] - t)).sum();
    Ok(sum / samples.len() as f64)
}

/// `sum_i w_i (theta_k^(i) - theta_k)^2` under the set's weights.
pub fn weighted_mse(samples: &ParticleSet, theta_true: &[f64], k: usize) -> Result<f64> {
    check_dim(samples.dim(), theta_true.len())?;
    if k >= samples.dim() {
        return Err(invalid("k", format!("coordinate {k} out of range")));
    }
    let w = samples.weights().ok_or(Error::Unweighted)?;
    let t = theta_true[k];
    Ok(samples
        .positions()
        .iter()
        .zip(w.values())
        .map(|(x, w)| w * (x[k] - t) * (x[k] - t))
        .sum())
}

/// Per-coordinate `MSE_k / theta_k^2` and their average.
pub fn nmse(samples: &ParticleSet, theta_true: &[f64]) -> Result<(Vec<f64>, f64)> {
    let per_k = (0..theta_true.len())
        .map(|k| mse(samples, theta_true, k))
        .collect::<Result<Vec<_>>>()?;
    normalize_mse(&per_k, theta_true)
}

fn normalize_mse(mse: &[f64], theta_true: &[f64]) -> Result<(Vec<f64>, f64)> {
    if theta_true.contains(&0.0) {
        return Err(invalid("theta_true", "NMSE is undefined for a zero parameter"));
    }
    let per_k: Vec<f64> = mse.iter().zip(theta_true).map(|(m, t)| m / (t * t)).collect();
    let mean = per_k.iter().sum::<f64>() / per_k.len() as f64;
    Ok((per_k, mean))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// MSE of the resampled population recorded for one iteration.
pub fn record_mse(record: &IterationRecord, theta_true: &[f64]) -> Vec<f64> {
    record
        .resampled_mean
        .iter()
        .zip(&record.resampled_variance)
        .zip(theta_true)
        .map(|((m, v), t)| v + (m - t) * (m - t))
        .collect()
}

/// MSE under the transformed weights recorded for one iteration.
pub fn record_weighted_mse(record: &IterationRecord, theta_true: &[f64]) -> Vec<f64> {
    let k = record.mean.len();
    (0..k)
        .map(|i| record.covariance[i * k + i] + (record.mean[i] - theta_true[i]).powi(2))
        .collect()
}

/// Cross-run mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    pub iteration: usize,
    pub ness_standard: Stat,
    pub ness_transformed: Stat,
    /// Per coordinate, over the resampled population.
    pub mse: Vec<Stat>,
    /// Per coordinate, under the transformed weights.
    pub weighted_mse: Vec<Stat>,
    /// `None` when some true parameter is zero.
    pub nmse: Option<Vec<Stat>>,
    pub mean_nmse: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub runs: usize,
    pub iterations: Vec<IterationSummary>,
    /// Final-iteration `(NESS of the transformed weights, log10 mean NMSE)` per run.
    pub final_scatter: Vec<(f64, Option<f64>)>,
}

/// Aggregates `P` traces of equal length into per-iteration statistics.
pub fn summarize_runs(traces: &[Vec<IterationRecord>], theta_true: &[f64]) -> Result<RunSummary> {
    let first = traces.first().ok_or_else(|| invalid("traces", "need at least one run"))?;
    let len = first.len();
    if len == 0 || traces.iter().any(|t| t.len() != len) {
        return Err(invalid("traces", "runs must share a non-zero iteration count"));
    }
    for rec in traces.iter().flatten() {
        check_dim(rec.resampled_mean.len(), theta_true.len())?;
    }
    let normalizable = !theta_true.contains(&0.0);
    let k = theta_true.len();

    let iterations = (0..len)
        .map(|l| {
            let recs: Vec<&IterationRecord> = traces.iter().map(|t| &t[l]).collect();
            let column = |f: &dyn Fn(&IterationRecord) -> f64| Stat::of(&recs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let mses: Vec<Vec<f64>> = recs.iter().map(|r| record_mse(r, theta_true)).collect();
            let wmses: Vec<Vec<f64>> = recs.iter().map(|r| record_weighted_mse(r, theta_true)).collect();
            let per_coord = |rows: &[Vec<f64>], scale: &dyn Fn(usize) -> f64| -> Vec<Stat> {
                (0..k)
                    .map(|c| Stat::of(&rows.iter().map(|row| row[c] * scale(c)).collect::<Vec<_>>()))
                    .collect()
            };
            let inv_sq = |c: usize| 1.0 / (theta_true[c] * theta_true[c]);
            let (nmse, mean_nmse) = if normalizable {
                let means: Vec<f64> = mses
                    .iter()
                    .map(|row| row.iter().enumerate().map(|(c, v)| v * inv_sq(c)).sum::<f64>() / k as f64)
                    .collect();
                (Some(per_coord(&mses, &inv_sq)), Some(Stat::of(&means)))
            } else {
                (None, None)
            };
            IterationSummary {
                iteration: first[l].iteration,
                ness_standard: column(&|r| r.ness_standard),
                ness_transformed: column(&|r| r.ness_transformed),
                mse: per_coord(&mses, &|_| 1.0),
                weighted_mse: per_coord(&wmses, &|_| 1.0),
                nmse,
                mean_nmse,
            }
        })
        .collect();

    let final_scatter = traces
        .iter()
        .map(|t| {
            let last = &t[len - 1];
            let log_nmse = normalize_mse(&record_mse(last, theta_true), theta_true)
                .ok()
                .map(|(_, m)| m.log10());
            (last.ness_transformed, log_nmse)
        })
        .collect();

    Ok(RunSummary {
        runs: traces.len(),
        iterations,
        final_scatter,
    })
}
