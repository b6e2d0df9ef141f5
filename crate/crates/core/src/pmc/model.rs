use crate::error::Result;
use crate::sampling::{ParticleSet, RngStream, StreamRng};

/// A posterior `pi(theta) ∝ p(y|theta) p(theta)` over `R^K`.
///
/// `log_likelihood` may be a stochastic estimate (unbiased in the linear
/// domain); it receives a generator dedicated to one particle at one
/// iteration. Both log-densities return finite values or `-inf`.
pub trait TargetModel: Sync {
    fn dim(&self) -> usize;

    fn sample_prior_one(&self, rng: &mut StreamRng) -> Vec<f64>;

    fn log_prior(&self, theta: &[f64]) -> f64;

    fn log_likelihood(&self, theta: &[f64], rng: &mut StreamRng) -> f64;

    /// `m` prior draws, particle `i` from sub-stream `i`.
    fn sample_prior(&self, m: usize, stream: RngStream) -> Result<ParticleSet> {
        let positions = (0..m as u64)
            .map(|i| self.sample_prior_one(&mut stream.child(i).rng()))
            .collect();
        ParticleSet::unweighted(positions)
    }
}
