use rayon::prelude::*;

use super::{log_add_exp, GmmData, GmmSpec, LN_2PI};
use crate::error::{invalid, Error, Result};

/// Points with log posterior this far below the coarse maximum are treated
/// as zero mass (`exp(-60)` relative).
const PRUNE_NATS: f64 = 60.0;
const MAX_BOUNDARY_FRACTION: f64 = 1e-6;
const MIN_RESOLUTION: usize = 400;
const DEFAULT_RESOLUTION: usize = 500;
const MIN_PRIOR_SDS: f64 = 6.0;

/// Square tensor grid with `resolution` nodes per axis, ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub resolution: usize,
}

impl Grid {
    /// `nu +- 6 sqrt(sigma2 / lambda)` per axis, 500 nodes.
    pub fn around_prior(spec: &GmmSpec) -> Self {
        Self::around_prior_with(spec, DEFAULT_RESOLUTION)
    }

    /// Prior-covering bounds with at least 500 nodes and a step no wider than
    /// half the posterior scale `sigma / sqrt(N min(rho, 1 - rho))` expected
    /// from `n_obs` observations.
    pub fn for_data(spec: &GmmSpec, n_obs: usize) -> Self {
        let span = 2.0 * MIN_PRIOR_SDS * spec.prior_variance().sqrt();
        let effective = n_obs as f64 * spec.rho.min(1.0 - spec.rho);
        let scale = (spec.sigma2 / effective.max(1.0)).sqrt();
        let needed = (span / (0.5 * scale)).ceil() as usize + 1;
        Self::around_prior_with(spec, needed.max(DEFAULT_RESOLUTION))
    }

    pub fn around_prior_with(spec: &GmmSpec, resolution: usize) -> Self {
        let half = MIN_PRIOR_SDS * spec.prior_variance().sqrt();
        Self {
            lo: [spec.nu - half; 2],
            hi: [spec.nu + half; 2],
            resolution,
        }
    }

    fn validate(&self, spec: &GmmSpec) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(invalid("grid", format!("resolution {} below {MIN_RESOLUTION}", self.resolution)));
        }
        // Tolerance absorbs rounding in `nu +- 6 sd`.
        let half = MIN_PRIOR_SDS * spec.prior_variance().sqrt() * (1.0 - 1e-12);
        for k in 0..2 {
            if !(self.lo[k] <= spec.nu - half && self.hi[k] >= spec.nu + half) {
                return Err(invalid("grid", "bounds must cover six prior standard deviations"));
            }
        }
        Ok(())
    }

    fn nodes(&self, k: usize) -> Vec<f64> {
        let h = self.step(k);
        (0..self.resolution).map(|i| self.lo[k] + h * i as f64).collect()
    }

    fn step(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / (self.resolution - 1) as f64
    }

    fn trapezoid_weight(&self, k: usize, i: usize) -> f64 {
        let h = self.step(k);
        if i == 0 || i == self.resolution - 1 {
            0.5 * h
        } else {
            h
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSummary {
    /// `E[theta | y]`.
    pub mean: [f64; 2],
    /// `E[(theta_k - theta_true_k)^2 | y]`, the smallest mean squared error
    /// any estimator can attain for this dataset.
    pub min_mse: [f64; 2],
    /// `log p(y)`.
    pub log_evidence: f64,
    /// Share of the quadrature mass carried by boundary nodes.
    pub boundary_mass: f64,
}

/// Trapezoidal quadrature of the unnormalized posterior on `grid`.
///
/// The grid is first scanned at a coarse stride; fine nodes are evaluated
/// only near coarse nodes within `PRUNE_NATS` of the coarse maximum.
pub fn grid_posterior_oracle(data: &GmmData, spec: &GmmSpec, grid: &Grid) -> Result<OracleSummary> {
    spec.validate()?;
    grid.validate(spec)?;
    let n = grid.resolution;
    let xs = grid.nodes(0);
    let ys = grid.nodes(1);

    // Per-node component terms: log(rho) - (y - t)^2 / 2 s2 and likewise for 1 - rho.
    let inv2s = 0.5 / spec.sigma2;
    let (ln_rho, ln_rest) = (spec.rho.ln(), (1.0 - spec.rho).ln());
    let terms = |nodes: &[f64], ln_mix: f64| -> Vec<Vec<f64>> {
        nodes
            .iter()
            .map(|t| data.y.iter().map(|y| ln_mix - (y - t) * (y - t) * inv2s).collect())
            .collect()
    };
    let a = terms(&xs, ln_rho);
    let b = terms(&ys, ln_rest);
    let v = spec.prior_variance();
    let prior_1d = |t: f64| -0.5 * (LN_2PI + v.ln()) - 0.5 * (t - spec.nu) * (t - spec.nu) / v;
    let pa: Vec<f64> = xs.iter().map(|t| prior_1d(*t)).collect();
    let pb: Vec<f64> = ys.iter().map(|t| prior_1d(*t)).collect();
    let lik_const = -0.5 * data.len() as f64 * (LN_2PI + spec.sigma2.ln());
    let log_post = |i: usize, j: usize| -> f64 {
        let ll: f64 = a[i].iter().zip(&b[j]).map(|(u, w)| log_add_exp(*u, *w)).sum();
        ll + lik_const + pa[i] + pb[j]
    };

    let stride = (n / 100).max(1);
    let coarse: Vec<usize> = (0..n).step_by(stride).chain(std::iter::once(n - 1)).collect();
    let coarse_vals: Vec<Vec<f64>> = coarse
        .par_iter()
        .map(|&i| coarse.iter().map(|&j| log_post(i, j)).collect())
        .collect();
    let cmax = coarse_vals
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let mut keep = vec![vec![false; n]; n];
    for (ci, &i) in coarse.iter().enumerate() {
        for (cj, &j) in coarse.iter().enumerate() {
            if coarse_vals[ci][cj] >= cmax - PRUNE_NATS {
                let reach = 2 * stride;
                for row in keep.iter_mut().take((i + reach + 1).min(n)).skip(i.saturating_sub(reach)) {
                    row[j.saturating_sub(reach)..(j + reach + 1).min(n)].fill(true);
                }
            }
        }
    }

    let fine: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| keep[i][j])
                .map(|j| (j, log_post(i, j)))
                .collect()
        })
        .collect();
    let fmax = fine
        .iter()
        .flatten()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);

    let t = spec.theta_true;
    let (mut mass, mut boundary) = (0.0, 0.0);
    let mut first = [0.0; 2];
    let mut second = [0.0; 2];
    for (i, row) in fine.iter().enumerate() {
        for &(j, lp) in row {
            let w = grid.trapezoid_weight(0, i) * grid.trapezoid_weight(1, j) * (lp - fmax).exp();
            mass += w;
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                boundary += w;
            }
            first[0] += w * xs[i];
            first[1] += w * ys[j];
            second[0] += w * (xs[i] - t[0]) * (xs[i] - t[0]);
            second[1] += w * (ys[j] - t[1]) * (ys[j] - t[1]);
        }
    }
    let boundary_mass = boundary / mass;
    if boundary_mass > MAX_BOUNDARY_FRACTION {
        return Err(Error::GridTooSmall { fraction: boundary_mass });
    }
    Ok(OracleSummary {
        mean: [first[0] / mass, first[1] / mass],
        min_mse: [second[0] / mass, second[1] / mass],
        log_evidence: fmax + mass.ln(),
        boundary_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{gmm_generate, gmm_loglik};
    use crate::sampling::RngStream;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn no_data_recovers_prior_moments() {
        let spec = GmmSpec::benchmark();
        let empty = GmmData::new(vec![]).unwrap();
        let out = grid_posterior_oracle(&empty, &spec, &Grid::around_prior(&spec)).unwrap();
        // Truncation at six standard deviations costs about 2e-8 of the second moment.
        assert_relative_eq!(out.mean[0], 1.0, max_relative = 1e-6);
        assert_relative_eq!(out.mean[1], 1.0, max_relative = 1e-6);
        assert_relative_eq!(out.min_mse[0], 11.0, max_relative = 1e-6);
        assert_relative_eq!(out.min_mse[1], 11.0, max_relative = 1e-6);
        assert!(out.log_evidence.abs() < 1e-6);
    }

    #[test]
    fn resolution_self_convergence() {
        let spec = GmmSpec::benchmark();
        let data = gmm_generate(&spec, 1000, RngStream::root(11)).unwrap();
        let grid = Grid::for_data(&spec, data.len());
        let doubled = Grid::around_prior_with(&spec, 2 * grid.resolution);
        let coarse = grid_posterior_oracle(&data, &spec, &grid).unwrap();
        let fine = grid_posterior_oracle(&data, &spec, &doubled).unwrap();
        for k in 0..2 {
            assert_relative_eq!(coarse.mean[k], fine.mean[k], max_relative = 1e-6);
            assert_relative_eq!(coarse.min_mse[k], fine.min_mse[k], max_relative = 1e-6);
        }
        assert_relative_eq!(coarse.log_evidence, fine.log_evidence, max_relative = 1e-6);
    }

    #[test]
    fn evidence_matches_prior_average_of_likelihood() {
        let spec = GmmSpec::benchmark();
        let sd = spec.prior_variance().sqrt();
        for n in [1, 3, 5] {
            let data = gmm_generate(&spec, n, RngStream::root(20 + n as u64)).unwrap();
            let grid = grid_posterior_oracle(&data, &spec, &Grid::around_prior(&spec)).unwrap();
            let mut rng = RngStream::root(30 + n as u64).rng();
            let draws = 1_000_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..draws {
                let theta = [
                    spec.nu + sd * rng.sample::<f64, _>(StandardNormal),
                    spec.nu + sd * rng.sample::<f64, _>(StandardNormal),
                ];
                let l = gmm_loglik(&theta, &data, &spec).exp();
                s1 += l;
                s2 += l * l;
            }
            let mean = s1 / draws as f64;
            let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
            let evidence = grid.log_evidence.exp();
            assert!((evidence - mean).abs() < 3.0 * se, "N={n}: grid {evidence} mc {mean} se {se}");
            for k in 0..2 {
                assert!(grid.mean[k] > -5.0 * sd + spec.nu && grid.mean[k] < 5.0 * sd + spec.nu);
            }
        }
    }

    #[test]
    fn rejects_small_grids() {
        let spec = GmmSpec::benchmark();
        let data = GmmData::new(vec![0.0]).unwrap();
        let mut grid = Grid::around_prior(&spec);
        grid.resolution = 100;
        assert!(grid_posterior_oracle(&data, &spec, &grid).is_err());
        let narrow = Grid {
            lo: [-2.0, -2.0],
            hi: [4.0, 4.0],
            resolution: 500,
        };
        assert!(grid_posterior_oracle(&data, &spec, &narrow).is_err());
    }

    #[test]
    fn flags_mass_on_boundary() {
        // Data far outside the prior pushes the posterior onto the grid edge.
        let spec = GmmSpec::benchmark();
        let data = GmmData::new(vec![60.0; 200]).unwrap();
        let out = grid_posterior_oracle(&data, &spec, &Grid::around_prior(&spec));
        assert!(matches!(out, Err(Error::GridTooSmall { .. })));
    }
}
