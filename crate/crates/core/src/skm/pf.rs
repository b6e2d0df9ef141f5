use super::sim::run_segment;
use super::{LvRates, SkmObservations};
use crate::error::{invalid, Result};
use crate::sampling::{multinomial_indices, RngStream, StreamRng};
use crate::weights::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfEstimate {
    /// `log p^(y | theta)`; `-inf` when some step leaves no particle with
    /// positive weight.
    pub log_likelihood: f64,
    /// Particle propagations aborted by the event budget, over all steps.
    pub explosions: u64,
}

/// Bootstrap particle filter estimate of `log p(y | theta)`.
///
/// Slot `j` propagates with `stream.child(0).child(j)` throughout the run;
/// resampling after observation `n` uses `stream.child(1).child(n)`.
pub fn pf_loglik(
    rates: &LvRates,
    obs: &SkmObservations,
    x0: [u64; 2],
    j_particles: usize,
    stream: RngStream,
    max_events: u64,
) -> Result<PfEstimate> {
    if j_particles < 1 {
        return Err(invalid("j_particles", "need at least one particle"));
    }
    if max_events < 1 {
        return Err(invalid("max_events", "must be at least 1"));
    }
    let slots = stream.child(0);
    let mut rngs: Vec<StreamRng> = (0..j_particles as u64).map(|j| slots.child(j).rng()).collect();
    let mut states = vec![x0; j_particles];
    let mut lw = vec![0.0; j_particles];
    let ln_j = (j_particles as f64).ln();
    let mut total = 0.0;
    let mut explosions = 0;

    for n in 1..=obs.len() {
        let (t0, t1) = (obs.time(n - 1), obs.time(n));
        for ((x, rng), w) in states.iter_mut().zip(rngs.iter_mut()).zip(lw.iter_mut()) {
            *w = match run_segment(x, t0, t1, rates, rng, max_events, |_, _, _| {}) {
                Ok(_) => obs.log_density(n, *x),
                Err(_) => {
                    explosions += 1;
                    f64::NEG_INFINITY
                }
            };
        }
        let step = log_sum_exp(&lw);
        if step == f64::NEG_INFINITY {
            return Ok(PfEstimate {
                log_likelihood: f64::NEG_INFINITY,
                explosions,
            });
        }
        total += step - ln_j;
        if n < obs.len() && j_particles > 1 {
            let w: Vec<f64> = lw.iter().map(|v| (v - step).exp()).collect();
            let idx = multinomial_indices(&w, j_particles, &mut stream.child(1).child(n as u64).rng());
            states = idx.iter().map(|&i| states[i]).collect();
        }
    }
    Ok(PfEstimate {
        log_likelihood: total,
        explosions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skm::{gillespie_simulate, observe, DEFAULT_MAX_EVENTS};

    fn data(seed: u64, n_obs: usize, sigma2: f64) -> SkmObservations {
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let root = RngStream::root(seed);
        let tr = gillespie_simulate(&rates, [71, 79], n_obs as f64, &mut root.child(0).rng(), DEFAULT_MAX_EVENTS).unwrap();
        observe(&tr, 1.0, sigma2, &mut root.child(1).rng()).unwrap()
    }

    #[test]
    fn frozen_dynamics_is_exact() {
        let obs = data(1, 10, 100.0);
        let frozen = LvRates::new([1e-12; 3]).unwrap();
        let exact: f64 = (1..=obs.len()).map(|n| obs.log_density(n, [71, 79])).sum();
        for j in [1, 7, 100] {
            let est = pf_loglik(&frozen, &obs, [71, 79], j, RngStream::root(2), DEFAULT_MAX_EVENTS).unwrap();
            assert_eq!(est.log_likelihood, exact);
        }
    }

    #[test]
    fn single_particle_follows_its_own_path() {
        let obs = data(3, 15, 100.0);
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        let stream = RngStream::root(4);
        let est = pf_loglik(&rates, &obs, [71, 79], 1, stream, DEFAULT_MAX_EVENTS).unwrap();

        let mut rng = stream.child(0).child(0).rng();
        let mut x = [71, 79];
        let mut expected = 0.0;
        for n in 1..=obs.len() {
            run_segment(&mut x, obs.time(n - 1), obs.time(n), &rates, &mut rng, DEFAULT_MAX_EVENTS, |_, _, _| {}).unwrap();
            expected += obs.log_density(n, x);
        }
        assert_eq!(est.log_likelihood, expected);
    }

    #[test]
    fn all_exploding_gives_negative_infinity() {
        let obs = data(5, 3, 100.0);
        let rates = LvRates::new([50.0, 1e-9, 0.3]).unwrap();
        let est = pf_loglik(&rates, &obs, [71, 79], 4, RngStream::root(6), 200).unwrap();
        assert_eq!(est.log_likelihood, f64::NEG_INFINITY);
        assert_eq!(est.explosions, 4);
    }

    #[test]
    fn rejects_zero_particles() {
        let obs = data(7, 2, 1.0);
        let rates = LvRates::new([0.5, 0.0025, 0.3]).unwrap();
        assert!(pf_loglik(&rates, &obs, [71, 79], 0, RngStream::root(0), 10).is_err());
    }
}
