use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{gmm_generate, gmm_loglik, GmmData, GmmSpec};
use crate::error::{invalid, Result};
use crate::sampling::RngStream;
use crate::weights::{ess, max_weight, normalize, LogWeights};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyCell {
    pub n: usize,
    pub m: usize,
    pub mean_max_weight: f64,
    pub mean_ess: f64,
}

/// Prior-proposal importance sampling on fresh datasets: for every `(N, M)`
/// pair, `p_runs` independent datasets of size `N` and prior samples of size
/// `M`, weighted by the likelihood. `N = 0` means an empty dataset.
///
/// Run `p` of cell `(a, b)` (indices into the grids) draws its data from
/// `stream.child(a).child(b).child(p).child(0)` and its samples from `.child(1)`.
pub fn degeneracy_study(
    spec: &GmmSpec,
    n_grid: &[usize],
    m_grid: &[usize],
    p_runs: usize,
    stream: RngStream,
) -> Result<Vec<DegeneracyCell>> {
    spec.validate()?;
    if p_runs == 0 {
        return Err(invalid("p_runs", "need at least one run"));
    }
    if m_grid.contains(&0) {
        return Err(invalid("m_grid", "sample sizes must be positive"));
    }
    let sd = spec.prior_variance().sqrt();
    let mut cells = Vec::with_capacity(n_grid.len() * m_grid.len());
    for (a, &n) in n_grid.iter().enumerate() {
        for (b, &m) in m_grid.iter().enumerate() {
            let cell = stream.child(a as u64).child(b as u64);
            let runs: Vec<(f64, f64)> = (0..p_runs as u64)
                .into_par_iter()
                .map(|p| -> Result<(f64, f64)> {
                    let run = cell.child(p);
                    let data = if n == 0 {
                        GmmData::new(Vec::new())?
                    } else {
                        gmm_generate(spec, n, run.child(0))?
                    };
                    let mut rng = run.child(1).rng();
                    let lw: Vec<f64> = (0..m)
                        .map(|_| {
                            let theta = [
                                spec.nu + sd * rng.sample::<f64, _>(StandardNormal),
                                spec.nu + sd * rng.sample::<f64, _>(StandardNormal),
                            ];
                            gmm_loglik(&theta, &data, spec)
                        })
                        .collect();
                    let (w, _) = normalize(&LogWeights::new(lw)?)?;
                    Ok((max_weight(&w), ess(&w)))
                })
                .collect::<Result<_>>()?;
            let p = p_runs as f64;
            cells.push(DegeneracyCell {
                n,
                m,
                mean_max_weight: runs.iter().map(|r| r.0).sum::<f64>() / p,
                mean_ess: runs.iter().map(|r| r.1).sum::<f64>() / p,
            });
        }
    }
    Ok(cells)
}
