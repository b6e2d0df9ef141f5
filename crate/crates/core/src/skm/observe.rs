use rand::Rng;
use rand_distr::StandardNormal;

use super::SkmTrajectory;
use crate::error::{invalid, Result};
use crate::sampling::StreamRng;

/// Noisy snapshots `y_n = x(n delta) + u_n`, `u_n ~ N(0, sigma2 I)`, `n = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkmObservations {
    pub y: Vec<[f64; 2]>,
    pub delta: f64,
    pub sigma2: f64,
}

impl SkmObservations {
    pub fn new(y: Vec<[f64; 2]>, delta: f64, sigma2: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta", "must be positive"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid("sigma2", "must be positive"));
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("y", "non-finite observation"));
        }
        Ok(Self { y, delta, sigma2 })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Sampling time of observation `n` (1-based).
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.delta
    }

    /// `log N(y_n; x, sigma2 I)` for 1-based `n`.
    pub fn log_density(&self, n: usize, x: [u64; 2]) -> f64 {
        let y = self.y[n - 1];
        let d0 = y[0] - x[0] as f64;
        let d1 = y[1] - x[1] as f64;
        -(2.0 * std::f64::consts::PI * self.sigma2).ln() - 0.5 * (d0 * d0 + d1 * d1) / self.sigma2
    }
}

/// Observes `traj` at `delta, 2 delta, ..` up to its horizon.
pub fn observe(traj: &SkmTrajectory, delta: f64, sigma2: f64, rng: &mut StreamRng) -> Result<SkmObservations> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "must be positive"));
    }
    let mut n_obs = (traj.horizon() / delta).floor() as usize;
    // Guards against `T / delta` rounding just below an integer.
    if ((n_obs + 1) as f64 * delta) <= traj.horizon() {
        n_obs += 1;
    }
    let sd = sigma2.sqrt();
    let y = (1..=n_obs)
        .map(|n| {
            let x = traj.state_at(n as f64 * delta);
            [0, 1].map(|c| x[c] as f64 + sd * rng.sample::<f64, _>(StandardNormal))
        })
        .collect();
    SkmObservations::new(y, delta, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use crate::skm::{gillespie_simulate, LvRates, DEFAULT_MAX_EVENTS};

    #[test]
    fn vanishing_noise_returns_states() {
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let tr = gillespie_simulate(&rates, [71, 79], 40.0, &mut RngStream::root(1).rng(), DEFAULT_MAX_EVENTS).unwrap();
        let obs = observe(&tr, 1.0, 1e-300, &mut RngStream::root(2).rng()).unwrap();
        assert_eq!(obs.len(), 40);
        for (n, y) in obs.y.iter().enumerate() {
            let x = tr.state_at((n + 1) as f64);
            assert_eq!(*y, [x[0] as f64, x[1] as f64]);
        }
    }

    #[test]
    fn noise_averages_out() {
        let n = 10_000;
        let tr = SkmTrajectory::new([71, 79], n as f64, vec![], vec![]).unwrap();
        let sigma2: f64 = 100.0;
        let obs = observe(&tr, 1.0, sigma2, &mut RngStream::root(3).rng()).unwrap();
        assert_eq!(obs.len(), n);
        for (c, x) in [71.0, 79.0].iter().enumerate() {
            let mean = obs.y.iter().map(|y| y[c]).sum::<f64>() / n as f64;
            assert!((mean - x).abs() < 4.0 * sigma2.sqrt() / (n as f64).sqrt());
        }
    }

    #[test]
    fn sample_at_event_time_uses_post_event_state() {
        let tr = SkmTrajectory::new([5, 5], 2.0, vec![1.0], vec![[6, 5]]).unwrap();
        let obs = observe(&tr, 1.0, 1e-300, &mut RngStream::root(4).rng()).unwrap();
        assert_eq!(obs.y, vec![[6.0, 5.0], [6.0, 5.0]]);
    }
}
