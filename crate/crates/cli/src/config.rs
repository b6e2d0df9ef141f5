//! Experiment configuration: `clap` flags, optionally seeded from a flat
//! `key = value` file. File entries are parsed as if given first on the
//! command line, so explicit flags override them.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Cli(#[from] clap::Error),

    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config file line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "npmc", about = "Nonlinear population Monte Carlo experiments", args_override_self = true)]
pub struct ExperimentConfig {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Experiment {
    /// Maximum weight and ESS of prior importance sampling on the mixture model.
    Degeneracy(DegeneracyConfig),
    /// Standard PMC against NPMC with tempering and clipping on the mixture model.
    Gmm(GmmConfig),
    /// Rate inference for the predator-prey jump process.
    Skm(SkmConfig),
    /// Error decay of clipped-weight estimates as the sample size grows.
    Convergence(ConvergenceConfig),
}

#[derive(Debug, Clone, Args)]
pub struct DegeneracyConfig {
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    pub n_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    pub m_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GmmConfig {
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Observations per dataset.
    #[arg(long, default_value_t = 1000)]
    pub n_obs: usize,
    /// Samples per iteration for both NPMC variants.
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    /// `M_T` of the clipping variant.
    #[arg(long, default_value_t = 50)]
    pub clip_count: usize,
    /// ESS below which the clipping variant transforms the weights.
    #[arg(long, default_value_t = 100.0)]
    pub min_eff: f64,
    /// Iteration at which the tempering exponent reaches 1/2.
    #[arg(long, default_value_t = 5.0)]
    pub gamma_midpoint: f64,
    /// Random-walk variances of standard PMC.
    #[arg(long, value_delimiter = ',', default_value = "5,2,0.1,0.05,0.01")]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub samples_per_scale: usize,
    #[arg(long, default_value_t = 0.01)]
    pub min_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SkmConfig {
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 500)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// `M_T`; scaled with `M` on retries.
    #[arg(long, default_value_t = 100)]
    pub clip_count: usize,
    /// Particle-filter size `J`.
    #[arg(long, default_value_t = 100)]
    pub j_particles: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.0025,0.3")]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "71,79")]
    pub x0: Vec<u64>,
    #[arg(long, default_value_t = 40.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 100.0)]
    pub sigma2: f64,
    /// Prior standard deviations; prior means equal `theta`.
    #[arg(long, value_delimiter = ',', default_value = "1.25,0.0065,0.77")]
    pub prior_std: Vec<f64>,
    /// Reaction budget per simulated segment.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_events: u64,
    /// Reruns with doubled `M` for runs ending at or below `ness_gate`.
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
    #[arg(long, default_value_t = 0.3)]
    pub ness_gate: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceConfig {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
    pub m_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub repetitions: usize,
}

impl ExperimentConfig {
    /// Parses `args` (program name first), splicing in the entries of any
    /// `--config` file right after the subcommand.
    pub fn parse_with_file<I, T>(args: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
        let first = Self::try_parse_from(&args)?;
        let Some(path) = first.common.config.clone() else {
            first.validate()?;
            return Ok(first);
        };
        let subcommand = subcommand_position(&args).expect("parsed config has a subcommand");
        let mut spliced = args[..=subcommand].to_vec();
        spliced.extend(read_config_file(&path)?);
        spliced.extend_from_slice(&args[subcommand + 1..]);
        let cfg = Self::try_parse_from(spliced)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.common.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        match &self.experiment {
            Experiment::Degeneracy(c) => c.validate(),
            Experiment::Gmm(c) => c.validate(),
            Experiment::Skm(c) => c.validate(),
            Experiment::Convergence(c) => c.validate(),
        }
    }
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    const NAMES: [&str; 4] = ["degeneracy", "gmm", "skm", "convergence"];
    args.iter().skip(1).position(|a| NAMES.iter().any(|n| a == n)).map(|i| i + 1)
}

/// `key = value` lines as `--key value` tokens. `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Vec<OsString>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut tokens = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        tokens.push(format!("--{key}").into());
        tokens.push(value.trim().into());
    }
    Ok(tokens)
}

fn positive_grid(field: &'static str, grid: &[usize]) -> Result<(), ConfigError> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(invalid(field, "needs at least one positive entry"));
    }
    Ok(())
}

fn at_least_one(field: &'static str, v: usize) -> Result<(), ConfigError> {
    if v == 0 {
        return Err(invalid(field, "must be at least 1"));
    }
    Ok(())
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(field, format!("{v} must be positive and finite")));
    }
    Ok(())
}

impl DegeneracyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "needs at least one entry"));
        }
        positive_grid("m_grid", &self.m_grid)?;
        at_least_one("runs", self.runs)
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        at_least_one("runs", self.runs)?;
        at_least_one("n_obs", self.n_obs)?;
        at_least_one("iterations", self.iterations)?;
        if self.m < 2 {
            return Err(invalid("m", "must be at least 2"));
        }
        if self.clip_count < 1 || self.clip_count >= self.m {
            return Err(invalid("clip_count", format!("needs 1 <= M_T < M = {}", self.m)));
        }
        if !(1.0..=self.m as f64).contains(&self.min_eff) {
            return Err(invalid("min_eff", format!("needs 1 <= value <= M = {}", self.m)));
        }
        if !self.gamma_midpoint.is_finite() {
            return Err(invalid("gamma_midpoint", "must be finite"));
        }
        if self.scales.is_empty() {
            return Err(invalid("scales", "needs at least one variance"));
        }
        for v in &self.scales {
            positive("scales", *v)?;
        }
        if self.scales.len() * self.samples_per_scale < 2 {
            return Err(invalid("samples_per_scale", "standard PMC needs at least 2 samples"));
        }
        let m = self.scales.len() * self.samples_per_scale;
        let floor = (self.min_fraction * m as f64).ceil() as usize;
        if !(0.0..1.0).contains(&self.min_fraction) || floor * self.scales.len() > m {
            return Err(invalid("min_fraction", "per-scale floor exceeds the sample size"));
        }
        Ok(())
    }
}

impl SkmConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        at_least_one("runs", self.runs)?;
        at_least_one("iterations", self.iterations)?;
        at_least_one("j_particles", self.j_particles)?;
        if self.m < 2 {
            return Err(invalid("m", "must be at least 2"));
        }
        if self.clip_count < 1 || self.clip_count >= self.m {
            return Err(invalid("clip_count", format!("needs 1 <= M_T < M = {}", self.m)));
        }
        if self.theta.len() != 3 {
            return Err(invalid("theta", "needs three rates"));
        }
        for t in &self.theta {
            positive("theta", *t)?;
        }
        if self.prior_std.len() != 3 {
            return Err(invalid("prior_std", "needs three standard deviations"));
        }
        for s in &self.prior_std {
            positive("prior_std", *s)?;
        }
        if self.x0.len() != 2 {
            return Err(invalid("x0", "needs two populations"));
        }
        positive("horizon", self.horizon)?;
        positive("delta", self.delta)?;
        positive("sigma2", self.sigma2)?;
        if self.delta > self.horizon {
            return Err(invalid("delta", "no observation fits inside the horizon"));
        }
        if self.max_events < 1 {
            return Err(invalid("max_events", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.ness_gate) {
            return Err(invalid("ness_gate", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive_grid("m_grid", &self.m_grid)?;
        if self.m_grid.iter().any(|m| *m < 2) {
            return Err(invalid("m_grid", "sample sizes must be at least 2"));
        }
        at_least_one("repetitions", self.repetitions)
    }
}
