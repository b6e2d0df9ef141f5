use npmc::metrics::{record_mse, summarize_runs, RunSummary};
use npmc::pmc::{IterationRecord, NpmcConfig};
use npmc::skm::{gillespie_simulate, observe, prior_from_spec, skm_npmc_run, LvRates, SkmModel};
use npmc::sampling::RngStream;
use npmc::weights::WeightTransform;
use rayon::prelude::*;

use super::derive_seed;
use crate::config::{CommonArgs, SkmConfig};
use crate::output::{num, opt_num, write_observations, write_table, write_trajectory};
use crate::RunError;

pub const SUMMARY_HEADER: [&str; 8] = [
    "iteration",
    "runs",
    "ness_mean",
    "ness_std",
    "ness_standard_mean",
    "ness_standard_std",
    "nmse_mean",
    "nmse_std",
];

pub const SCATTER_HEADER: [&str; 10] = [
    "run",
    "m",
    "attempts",
    "final_ness",
    "nmse1",
    "nmse2",
    "nmse3",
    "log10_nmse",
    "explosions",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Final NESS above the gate.
    Passed,
    /// Completed every attempt without clearing the gate.
    BelowGate,
    /// The last attempt aborted with an error.
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Passed => "passed",
            Self::BelowGate => "below_gate",
            Self::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkmRunOutcome {
    pub run: usize,
    /// Sample size of the last attempt.
    pub m: usize,
    pub attempts: usize,
    pub status: RunStatus,
    /// NESS of the transformed weights at the last iteration.
    pub final_ness: Option<f64>,
    /// Per-rate MSE normalized by the squared true rate.
    pub nmse: Option<[f64; 3]>,
    /// Particle propagations cut off by the event budget, over all attempts.
    pub explosions: u64,
    pub error: Option<String>,
    records: Option<Vec<IterationRecord>>,
}

impl SkmRunOutcome {
    pub fn mean_nmse(&self) -> Option<f64> {
        self.nmse.map(|v| v.iter().sum::<f64>() / 3.0)
    }
}

#[derive(Debug, Clone)]
pub struct SkmReport {
    pub runs: Vec<SkmRunOutcome>,
    /// Over runs whose last attempt completed; `None` if none did or their
    /// traces differ in length.
    pub summary: Option<RunSummary>,
}

impl SkmReport {
    pub fn passed(&self) -> impl Iterator<Item = &SkmRunOutcome> {
        self.runs.iter().filter(|r| r.status == RunStatus::Passed)
    }
}

/// Run `p` simulates its trajectory from stream `(p, 0)` and its
/// observations from `(p, 1)`; attempt `a` samples with a seed derived from
/// `(p, 2 + a)` and doubles `M` and `M_T` relative to attempt `a - 1`.
/// Writes `skm_trajectory.csv` and `skm_observations.csv` for run 0, then
/// `skm_summary.csv` and `skm_scatter.csv`.
pub fn run_skm(common: &CommonArgs, cfg: &SkmConfig) -> Result<SkmReport, RunError> {
    cfg.validate()?;
    let theta = [cfg.theta[0], cfg.theta[1], cfg.theta[2]];
    let x0 = [cfg.x0[0], cfg.x0[1]];
    let rates = LvRates::new(theta)?;
    let prior = prior_from_spec(theta, [cfg.prior_std[0], cfg.prior_std[1], cfg.prior_std[2]])?;
    let root = RngStream::root(common.seed);

    let runs: Vec<SkmRunOutcome> = (0..cfg.runs)
        .into_par_iter()
        .map(|p| -> Result<SkmRunOutcome, RunError> {
            let s = root.child(p as u64);
            let traj = gillespie_simulate(&rates, x0, cfg.horizon, &mut s.child(0).rng(), cfg.max_events)?;
            let obs = observe(&traj, cfg.delta, cfg.sigma2, &mut s.child(1).rng())?;
            if p == 0 {
                write_trajectory(&common.out.join("skm_trajectory.csv"), &traj)?;
                write_observations(&common.out.join("skm_observations.csv"), &obs)?;
            }
            let mut outcome = SkmRunOutcome {
                run: p,
                m: cfg.m,
                attempts: 0,
                status: RunStatus::Failed,
                final_ness: None,
                nmse: None,
                explosions: 0,
                error: None,
                records: None,
            };
            for a in 0..=cfg.retries {
                let m = cfg.m << a;
                let model = SkmModel::new(prior, obs.clone(), x0, cfg.j_particles)?.with_max_events(cfg.max_events);
                let npmc_cfg = NpmcConfig::new(
                    m,
                    cfg.iterations,
                    WeightTransform::ClipHard {
                        clip_count: cfg.clip_count << a,
                    },
                    derive_seed(common, &[p as u64, 2 + a as u64]),
                );
                let result = skm_npmc_run(&model, &npmc_cfg);
                outcome.m = m;
                outcome.attempts = a + 1;
                outcome.explosions += model.explosion_count();
                match result {
                    Ok(out) => {
                        let last = out.last();
                        let mse = record_mse(last, &theta);
                        outcome.final_ness = Some(last.ness_transformed);
                        outcome.nmse = Some([0, 1, 2].map(|k| mse[k] / (theta[k] * theta[k])));
                        outcome.error = None;
                        outcome.status = if last.ness_transformed > cfg.ness_gate {
                            RunStatus::Passed
                        } else {
                            RunStatus::BelowGate
                        };
                        outcome.records = Some(out.records);
                    }
                    Err(e) => {
                        outcome.final_ness = None;
                        outcome.nmse = None;
                        outcome.error = Some(e.to_string());
                        outcome.status = RunStatus::Failed;
                        outcome.records = None;
                    }
                }
                if outcome.status == RunStatus::Passed {
                    break;
                }
            }
            Ok(outcome)
        })
        .collect::<Result<_, _>>()?;

    let traces: Vec<Vec<IterationRecord>> = runs.iter().filter_map(|r| r.records.clone()).collect();
    let summary = if traces.is_empty() || traces.iter().any(|t| t.len() != traces[0].len()) {
        None
    } else {
        Some(summarize_runs(&traces, &theta)?)
    };
    let report = SkmReport { runs, summary };
    write_skm_tables(common, &report)?;
    Ok(report)
}

fn write_skm_tables(common: &CommonArgs, report: &SkmReport) -> Result<(), RunError> {
    let summary: Vec<Vec<String>> = report
        .summary
        .iter()
        .flat_map(|s| {
            s.iterations.iter().map(|it| {
                let nmse = it.mean_nmse.unwrap_or(npmc::metrics::Stat {
                    mean: f64::NAN,
                    std: f64::NAN,
                });
                vec![
                    it.iteration.to_string(),
                    s.runs.to_string(),
                    num(it.ness_transformed.mean),
                    num(it.ness_transformed.std),
                    num(it.ness_standard.mean),
                    num(it.ness_standard.std),
                    num(nmse.mean),
                    num(nmse.std),
                ]
            })
        })
        .collect();
    let scatter: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| {
            let nmse = |k: usize| opt_num(r.nmse.map(|v| v[k]));
            vec![
                r.run.to_string(),
                r.m.to_string(),
                r.attempts.to_string(),
                opt_num(r.final_ness),
                nmse(0),
                nmse(1),
                nmse(2),
                opt_num(r.mean_nmse().map(f64::log10)),
                r.explosions.to_string(),
                r.status.as_str().to_string(),
            ]
        })
        .collect();
    write_table(&common.out.join("skm_summary.csv"), &SUMMARY_HEADER, &summary)?;
    write_table(&common.out.join("skm_scatter.csv"), &SCATTER_HEADER, &scatter)
}
