use npmc::gmm::{gmm_generate, grid_posterior_oracle, GmmModel, GmmSpec, Grid, OracleSummary};
use npmc::metrics::{summarize_runs, RunSummary, Stat};
use npmc::pmc::{modified_npmc_run, npmc_run, std_pmc_run, IterationRecord, NpmcConfig, StdPmcConfig};
use npmc::sampling::RngStream;
use npmc::weights::{GammaSchedule, WeightTransform};
use rayon::prelude::*;

use super::derive_seed;
use crate::config::{CommonArgs, GmmConfig};
use crate::output::{num, write_table};
use crate::RunError;

pub const ALGORITHMS: [&str; 3] = ["pmc", "npmc_temper", "npmc_clip"];

pub const SUMMARY_HEADER: [&str; 10] = [
    "algorithm",
    "iteration",
    "ness_mean",
    "ness_std",
    "ness_standard_mean",
    "ness_standard_std",
    "mse1_mean",
    "mse1_std",
    "mse2_mean",
    "mse2_std",
];

pub const FINAL_HEADER: [&str; 7] = [
    "algorithm",
    "mean_ness",
    "std_ness",
    "mean_mse1",
    "mean_mse2",
    "std_mse1",
    "std_mse2",
];

#[derive(Debug, Clone)]
pub struct AlgorithmSummary {
    pub name: &'static str,
    pub summary: RunSummary,
}

impl AlgorithmSummary {
    /// Final-iteration NESS of the weights used for resampling.
    pub fn final_ness(&self) -> Stat {
        self.summary.iterations.last().expect("nonempty").ness_transformed
    }

    /// Final-iteration MSE of the resampled population, per component.
    pub fn final_mse(&self) -> [Stat; 2] {
        let last = self.summary.iterations.last().expect("nonempty");
        [last.mse[0], last.mse[1]]
    }
}

#[derive(Debug, Clone)]
pub struct GmmReport {
    /// In [`ALGORITHMS`] order.
    pub algorithms: Vec<AlgorithmSummary>,
    /// Grid-quadrature reference for each run's dataset.
    pub oracle: Vec<OracleSummary>,
}

impl GmmReport {
    pub fn algorithm(&self, name: &str) -> &AlgorithmSummary {
        self.algorithms.iter().find(|a| a.name == name).expect("known algorithm")
    }

    /// Cross-run statistics of the oracle minimum MSE.
    pub fn oracle_min_mse(&self) -> [Stat; 2] {
        [0, 1].map(|k| Stat::of(&self.oracle.iter().map(|o| o.min_mse[k]).collect::<Vec<_>>()))
    }
}

/// Run `p` draws its dataset from `root(seed).child(p).child(0)`; the three
/// samplers use seeds derived from `(p, 1)`, `(p, 2)` and `(p, 3)`.
/// Writes `gmm_summary.csv` and `gmm_final.csv`.
pub fn run_gmm_comparison(common: &CommonArgs, cfg: &GmmConfig) -> Result<GmmReport, RunError> {
    cfg.validate()?;
    let spec = GmmSpec::benchmark();
    let root = RngStream::root(common.seed);
    type RunOut = (OracleSummary, [Vec<IterationRecord>; 3]);
    let runs: Vec<RunOut> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|p| -> Result<RunOut, RunError> {
            let data = gmm_generate(&spec, cfg.n_obs, root.child(p).child(0))?;
            let oracle = grid_posterior_oracle(&data, &spec, &Grid::for_data(&spec, data.len()))?;
            let model = GmmModel::new(spec, data)?;
            let pmc = std_pmc_run(
                &model,
                &StdPmcConfig {
                    scales: cfg.scales.clone(),
                    samples_per_scale: cfg.samples_per_scale,
                    iterations: cfg.iterations,
                    min_fraction: cfg.min_fraction,
                    seed: derive_seed(common, &[p, 1]),
                },
            )?;
            let temper = npmc_run(
                &model,
                &NpmcConfig::new(
                    cfg.m,
                    cfg.iterations,
                    WeightTransform::Temper {
                        gamma: GammaSchedule::Sigmoid {
                            midpoint: cfg.gamma_midpoint,
                        },
                    },
                    derive_seed(common, &[p, 2]),
                ),
            )?;
            let clip = modified_npmc_run(
                &model,
                &NpmcConfig::new(
                    cfg.m,
                    cfg.iterations,
                    WeightTransform::ClipHard {
                        clip_count: cfg.clip_count,
                    },
                    derive_seed(common, &[p, 3]),
                )
                .with_min_eff(cfg.min_eff),
            )?;
            Ok((oracle, [pmc.run.records, temper.records, clip.records]))
        })
        .collect::<Result<_, _>>()?;

    let theta = spec.theta_true;
    let algorithms = ALGORITHMS
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let traces: Vec<Vec<IterationRecord>> = runs.iter().map(|r| r.1[a].clone()).collect();
            Ok(AlgorithmSummary {
                name,
                summary: summarize_runs(&traces, &theta)?,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let report = GmmReport {
        algorithms,
        oracle: runs.into_iter().map(|r| r.0).collect(),
    };
    write_gmm_tables(common, &report)?;
    Ok(report)
}

fn write_gmm_tables(common: &CommonArgs, report: &GmmReport) -> Result<(), RunError> {
    let mut summary = Vec::new();
    let mut finals = Vec::new();
    for alg in &report.algorithms {
        for it in &alg.summary.iterations {
            summary.push(vec![
                alg.name.to_string(),
                it.iteration.to_string(),
                num(it.ness_transformed.mean),
                num(it.ness_transformed.std),
                num(it.ness_standard.mean),
                num(it.ness_standard.std),
                num(it.mse[0].mean),
                num(it.mse[0].std),
                num(it.mse[1].mean),
                num(it.mse[1].std),
            ]);
        }
        let ness = alg.final_ness();
        let mse = alg.final_mse();
        finals.push(vec![
            alg.name.to_string(),
            num(ness.mean),
            num(ness.std),
            num(mse[0].mean),
            num(mse[1].mean),
            num(mse[0].std),
            num(mse[1].std),
        ]);
    }
    let oracle = report.oracle_min_mse();
    finals.push(vec![
        "true_posterior".to_string(),
        String::new(),
        String::new(),
        num(oracle[0].mean),
        num(oracle[1].mean),
        num(oracle[0].std),
        num(oracle[1].std),
    ]);
    write_table(&common.out.join("gmm_summary.csv"), &SUMMARY_HEADER, &summary)?;
    write_table(&common.out.join("gmm_final.csv"), &FINAL_HEADER, &finals)
}
