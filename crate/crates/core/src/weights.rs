//! Log-domain importance weights.
//!
//! Unnormalized weights are always carried as logarithms; `f64::NEG_INFINITY`
//! encodes a zero weight. The nonlinear transformations (tempering, hard and
//! soft clipping) act on the unnormalized log-weights and are followed by a
//! stable normalization.

use crate::error::{invalid, Error, Result};

/// Unnormalized log-scale importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWeights(Vec<f64>);

impl LogWeights {
    /// Entries must be finite or `-inf`. An all `-inf` vector is accepted
    /// here and rejected by [`normalize`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("log_weights", "empty"));
        }
        if let Some(v) = values.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(invalid("log_weights", format!("entry {v} is not finite or -inf")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest finite entry, `None` if every weight is zero.
    pub fn max_finite(&self) -> Option<f64> {
        self.0
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Weights in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWeights(Vec<f64>);

impl NormalizedWeights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("weights", "empty"));
        }
        if values.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(invalid("weights", "entries must lie in [0, 1]"));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("entries sum to {total}, not 1")));
        }
        Ok(Self(values))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `log(sum(exp(values)))` with max-subtraction. Returns `-inf` when every
/// entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes log-weights, returning the weights and `log(sum(exp(lw)))`.
pub fn normalize(lw: &LogWeights) -> Result<(NormalizedWeights, f64)> {
    let max = lw.max_finite().ok_or(Error::AllWeightsZero)?;
    let scaled: Vec<f64> = lw.values().iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = scaled.iter().sum();
    let weights = scaled.into_iter().map(|w| w / sum).collect();
    Ok((NormalizedWeights(weights), max + sum.ln()))
}

/// Effective sample size `1 / sum(w^2)`.
pub fn ess(w: &NormalizedWeights) -> f64 {
    1.0 / w.values().iter().map(|x| x * x).sum::<f64>()
}

/// Effective sample size divided by the number of weights.
pub fn ness(w: &NormalizedWeights) -> f64 {
    ess(w) / w.len() as f64
}

pub fn max_weight(w: &NormalizedWeights) -> f64 {
    w.values().iter().copied().fold(0.0, f64::max)
}

/// Raises every unnormalized weight to the power `gamma`.
pub fn temper(lw: &LogWeights, gamma: f64) -> Result<LogWeights> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("{gamma} is outside (0, 1]")));
    }
    Ok(LogWeights(lw.values().iter().map(|v| v * gamma).collect()))
}

/// Log of the hard-clipping threshold: the `clip_count`-th largest
/// log-weight after a stable descending sort. If fewer than `clip_count`
/// weights are nonzero the smallest nonzero weight is used, so the threshold
/// is always finite.
pub fn clip_threshold(lw: &LogWeights, clip_count: usize) -> Result<f64> {
    let m = lw.len();
    if clip_count < 1 || clip_count >= m {
        return Err(invalid(
            "clip_count",
            format!("{clip_count} must satisfy 1 <= M_T < M = {m}"),
        ));
    }
    let mut sorted = lw.values().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let t = sorted[clip_count - 1];
    if t.is_finite() {
        return Ok(t);
    }
    sorted
        .iter()
        .rev()
        .copied()
        .find(|v| v.is_finite())
        .ok_or(Error::AllWeightsZero)
}

/// `min(w*, T)` with `T` from [`clip_threshold`].
pub fn clip_hard(lw: &LogWeights, clip_count: usize) -> Result<LogWeights> {
    let t = clip_threshold(lw, clip_count)?;
    Ok(LogWeights(lw.values().iter().map(|v| v.min(t)).collect()))
}

/// Soft clipping `2b / (1 + exp(-2w/b)) - b = b tanh(w/b)`.
pub fn clip_soft(lw: &LogWeights, beta: f64) -> Result<LogWeights> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("{beta} must be positive and finite")));
    }
    Ok(clip_soft_log(lw, beta.ln()))
}

/// [`clip_soft`] with the saturation level given as `ln(beta)`, which keeps
/// the map usable when the weights themselves would overflow.
pub fn clip_soft_log(lw: &LogWeights, log_beta: f64) -> LogWeights {
    LogWeights(
        lw.values()
            .iter()
            .map(|&v| log_beta + log_tanh_exp(v - log_beta))
            .collect(),
    )
}

/// `ln(tanh(exp(x)))`.
fn log_tanh_exp(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x < -9.0 {
        // tanh(u) = u (1 - u^2/3 + ...), u < 1.3e-4
        let u2 = (2.0 * x).exp();
        return x + (-u2 / 3.0).ln_1p();
    }
    let u = x.exp();
    if u > 20.0 {
        // tanh(u) = 1 - 2e^{-2u} + ...
        return (-2.0 * (-2.0 * u).exp()).ln_1p();
    }
    u.tanh().ln()
}

/// Largest tempering exponent in `[1e-8, 1]` whose tempered weights reach
/// `target_ess`, located by 30 bisection steps. A relative shortfall of
/// `1e-3` is accepted.
pub fn adapt_gamma(lw: &LogWeights, target_ess: f64) -> Result<f64> {
    let m = lw.len() as f64;
    if !(1.0..=m).contains(&target_ess) {
        return Err(invalid(
            "target_ess",
            format!("{target_ess} must lie in [1, {m}]"),
        ));
    }
    let goal = target_ess * (1.0 - 1e-3);
    let ess_at = |gamma: f64| -> Result<f64> { Ok(ess(&normalize(&temper(lw, gamma)?)?.0)) };
    if ess_at(1.0)? >= goal {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1e-8, 1.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if ess_at(mid)? >= goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Tempering exponent per iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSchedule {
    Constant(f64),
    /// `1 / (1 + exp(-(iteration - midpoint)))`.
    Sigmoid { midpoint: f64 },
    /// Explicit values; iterations past the end reuse the last entry.
    Table(Vec<f64>),
    /// Chosen per iteration by [`adapt_gamma`] to reach `target_ness * M`.
    Adaptive { target_ness: f64 },
}

impl GammaSchedule {
    pub fn gamma(&self, iteration: usize, lw: &LogWeights) -> Result<f64> {
        match self {
            Self::Constant(g) => Ok(*g),
            Self::Sigmoid { midpoint } => Ok(1.0 / (1.0 + (-(iteration as f64 - midpoint)).exp())),
            Self::Table(values) => values
                .get(iteration)
                .or(values.last())
                .copied()
                .ok_or_else(|| invalid("gamma_schedule", "empty table")),
            Self::Adaptive { target_ness } => {
                adapt_gamma(lw, (target_ness * lw.len() as f64).clamp(1.0, lw.len() as f64))
            }
        }
    }
}

/// Saturation level of the soft clip per iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaSchedule {
    /// `beta_l` equals the hard-clip threshold for the configured `M_T`.
    ClipThreshold,
    /// Explicit linear-domain values; iterations past the end reuse the last entry.
    Table(Vec<f64>),
}

/// The nonlinearity applied to the unnormalized weights.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightTransform {
    Identity,
    Temper { gamma: GammaSchedule },
    ClipHard { clip_count: usize },
    ClipSoft { clip_count: usize, beta: BetaSchedule },
}

impl WeightTransform {
    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    /// Checks the parameters that do not depend on the weights themselves.
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Temper { gamma } => match gamma {
                GammaSchedule::Constant(g) => check_gamma(*g),
                GammaSchedule::Table(values) if values.is_empty() => {
                    Err(invalid("gamma_schedule", "empty table"))
                }
                GammaSchedule::Table(values) => values.iter().try_for_each(|g| check_gamma(*g)),
                GammaSchedule::Sigmoid { midpoint } if !midpoint.is_finite() => {
                    Err(invalid("gamma_schedule", "midpoint must be finite"))
                }
                GammaSchedule::Sigmoid { .. } => Ok(()),
                GammaSchedule::Adaptive { target_ness } => {
                    if *target_ness > 0.0 && *target_ness <= 1.0 {
                        Ok(())
                    } else {
                        Err(invalid("target_ness", format!("{target_ness} is outside (0, 1]")))
                    }
                }
            },
            Self::ClipHard { clip_count } => check_clip_count(*clip_count, m),
            Self::ClipSoft { clip_count, beta } => {
                check_clip_count(*clip_count, m)?;
                match beta {
                    BetaSchedule::Table(values) if values.is_empty() => {
                        Err(invalid("beta_schedule", "empty table"))
                    }
                    BetaSchedule::Table(values) if values.iter().any(|b| !(*b > 0.0)) => {
                        Err(invalid("beta_schedule", "entries must be positive"))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn apply(&self, lw: &LogWeights, iteration: usize) -> Result<LogWeights> {
        match self {
            Self::Identity => Ok(lw.clone()),
            Self::Temper { gamma } => temper(lw, gamma.gamma(iteration, lw)?),
            Self::ClipHard { clip_count } => clip_hard(lw, *clip_count),
            Self::ClipSoft { clip_count, beta } => match beta {
                BetaSchedule::ClipThreshold => {
                    Ok(clip_soft_log(lw, clip_threshold(lw, *clip_count)?))
                }
                BetaSchedule::Table(values) => {
                    let b = values.get(iteration).or(values.last()).copied();
                    clip_soft(lw, b.ok_or_else(|| invalid("beta_schedule", "empty table"))?)
                }
            },
        }
    }
}

fn check_gamma(g: f64) -> Result<()> {
    if g > 0.0 && g <= 1.0 {
        Ok(())
    } else {
        Err(invalid("gamma", format!("{g} is outside (0, 1]")))
    }
}

fn check_clip_count(clip_count: usize, m: usize) -> Result<()> {
    if clip_count >= 1 && clip_count < m {
        Ok(())
    } else {
        Err(invalid(
            "clip_count",
            format!("{clip_count} must satisfy 1 <= M_T < M = {m}"),
        ))
    }
}
