use rand::Rng;
use rand_distr::Exp1;

use super::LvRates;
use crate::error::{invalid, Error, Result};
use crate::sampling::StreamRng;

/// Per-trajectory event budget used when the caller has no better bound.
pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;

/// Population change of each reaction: prey birth, predation, predator death.
pub const STOICHIOMETRY: [[i64; 2]; 3] = [[1, 0], [-1, 1], [0, -1]];

/// `g_k(x)`: prey, prey times predators, predators.
#[inline]
pub fn rate_terms(x: [u64; 2]) -> [f64; 3] {
    let (prey, pred) = (x[0] as f64, x[1] as f64);
    [prey, prey * pred, pred]
}

/// Reaction counts and integrated rate terms over a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    pub counts: [u64; 3],
    pub integrated: [f64; 3],
}

/// A piecewise-constant Lotka-Volterra path on `[0, horizon]`.
///
/// `states[e]` holds from `times[e]` (inclusive) until the next event.
#[derive(Debug, Clone, PartialEq)]
pub struct SkmTrajectory {
    x0: [u64; 2],
    horizon: f64,
    times: Vec<f64>,
    states: Vec<[u64; 2]>,
    reaction_types: Vec<u8>,
    reaction_counts: [u64; 3],
    integrated_hazards: [f64; 3],
}

impl SkmTrajectory {
    /// Rebuilds a path from its event list, inferring each reaction from
    /// the population change.
    pub fn new(x0: [u64; 2], horizon: f64, times: Vec<f64>, states: Vec<[u64; 2]>) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", "must be finite and non-negative"));
        }
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        let mut reaction_types = Vec::with_capacity(times.len());
        let mut prev_t = 0.0;
        let mut prev_x = x0;
        for (&t, &x) in times.iter().zip(&states) {
            if !(t > prev_t) || t > horizon {
                return Err(invalid("times", format!("event time {t} not increasing within (0, {horizon}]")));
            }
            let delta = [x[0] as i64 - prev_x[0] as i64, x[1] as i64 - prev_x[1] as i64];
            let k = STOICHIOMETRY
                .iter()
                .position(|s| *s == delta)
                .ok_or_else(|| invalid("states", format!("change {delta:?} at t = {t} matches no reaction")))?;
            reaction_types.push(k as u8 + 1);
            prev_t = t;
            prev_x = x;
        }
        let mut traj = Self {
            x0,
            horizon,
            times,
            states,
            reaction_types,
            reaction_counts: [0; 3],
            integrated_hazards: [0.0; 3],
        };
        let full = traj.stats(0.0, horizon);
        traj.reaction_counts = full.counts;
        traj.integrated_hazards = full.integrated;
        Ok(traj)
    }

    pub fn x0(&self) -> [u64; 2] {
        self.x0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[[u64; 2]] {
        &self.states
    }

    /// Reaction labels in `{1, 2, 3}`.
    pub fn reaction_types(&self) -> &[u8] {
        &self.reaction_types
    }

    /// `r_k`.
    pub fn reaction_counts(&self) -> [u64; 3] {
        self.reaction_counts
    }

    /// `int_0^T g_k(x(t)) dt`.
    pub fn integrated_hazards(&self) -> [f64; 3] {
        self.integrated_hazards
    }

    pub fn final_state(&self) -> [u64; 2] {
        self.states.last().copied().unwrap_or(self.x0)
    }

    /// Right-continuous state: the population after every event at or before `t`.
    pub fn state_at(&self, t: f64) -> [u64; 2] {
        match self.times.partition_point(|s| *s <= t) {
            0 => self.x0,
            e => self.states[e - 1],
        }
    }

    /// Events in `(t0, t1]` and `int_{t0}^{t1} g_k(x(t)) dt`.
    pub fn stats(&self, t0: f64, t1: f64) -> SufficientStats {
        let mut counts = [0u64; 3];
        let mut integrated = [0.0; 3];
        let mut t = t0;
        let mut x = self.state_at(t0);
        let first = self.times.partition_point(|s| *s <= t0);
        for e in first..self.times.len() {
            if self.times[e] > t1 {
                break;
            }
            let g = rate_terms(x);
            for k in 0..3 {
                integrated[k] += g[k] * (self.times[e] - t);
            }
            counts[self.reaction_types[e] as usize - 1] += 1;
            t = self.times[e];
            x = self.states[e];
        }
        let g = rate_terms(x);
        for k in 0..3 {
            integrated[k] += g[k] * (t1 - t);
        }
        SufficientStats { counts, integrated }
    }
}

/// Runs the jump process from `x` over `(t0, t1]`, calling `on_event` after
/// each reaction. Fails once more than `max_events` reactions occur.
pub(crate) fn run_segment<F>(
    x: &mut [u64; 2],
    t0: f64,
    t1: f64,
    rates: &LvRates,
    rng: &mut StreamRng,
    max_events: u64,
    mut on_event: F,
) -> Result<u64>
where
    F: FnMut(f64, usize, [u64; 2]),
{
    let theta = rates.theta();
    let mut t = t0;
    let mut events = 0;
    loop {
        let g = rate_terms(*x);
        let a = [theta[0] * g[0], theta[1] * g[1], theta[2] * g[2]];
        let a0 = a[0] + a[1] + a[2];
        if !(a0 > 0.0) {
            return Ok(events);
        }
        let tau: f64 = rng.sample::<f64, _>(Exp1) / a0;
        if t + tau > t1 {
            return Ok(events);
        }
        if events == max_events {
            return Err(Error::PopulationExplosion { max_events });
        }
        t += tau;
        let u = rng.random::<f64>() * a0;
        let k = if u < a[0] {
            0
        } else if u < a[0] + a[1] {
            1
        } else {
            2
        };
        let s = STOICHIOMETRY[k];
        x[0] = x[0].checked_add_signed(s[0]).expect("reaction with positive hazard keeps prey >= 0");
        x[1] = x[1].checked_add_signed(s[1]).expect("reaction with positive hazard keeps predators >= 0");
        events += 1;
        on_event(t, k, *x);
    }
}

/// Exact stochastic simulation of the predator-prey network on `[0, horizon]`.
pub fn gillespie_simulate(
    rates: &LvRates,
    x0: [u64; 2],
    horizon: f64,
    rng: &mut StreamRng,
    max_events: u64,
) -> Result<SkmTrajectory> {
    if max_events < 1 {
        return Err(invalid("max_events", "must be at least 1"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", "must be finite and non-negative"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut x = x0;
    run_segment(&mut x, 0.0, horizon, rates, rng, max_events, |t, _, s| {
        times.push(t);
        states.push(s);
    })?;
    let traj = SkmTrajectory::new(x0, horizon, times, states)?;
    debug_assert_eq!(traj.final_state(), x);
    Ok(traj)
}
