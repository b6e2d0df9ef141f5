use npmc::pmc::{convergence_error_curves, ConvergenceRow, TargetModel};
use npmc::sampling::{RngStream, StreamRng};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{CommonArgs, ConvergenceConfig};
use crate::output::{num, write_table};
use crate::RunError;

pub const CONVERGENCE_HEADER: [&str; 11] = [
    "transform",
    "function",
    "M",
    "clip_count",
    "err_bar_vs_std",
    "err_bar_vs_bridge",
    "err_bridge_vs_std",
    "err_bar_vs_truth",
    "err_std_vs_truth",
    "triangle_violations",
    "repetitions",
];

/// Prior `N(0, 1)` and one observation `y ~ N(theta, 1)`; the posterior is
/// `N(y/2, 1/2)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianTarget {
    pub y: f64,
}

impl GaussianTarget {
    pub fn posterior_mean(&self) -> f64 {
        self.y / 2.0
    }

    pub const POSTERIOR_VARIANCE: f64 = 0.5;

    fn posterior_density(&self, x: f64) -> f64 {
        let v = Self::POSTERIOR_VARIANCE;
        (-(x - self.posterior_mean()).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }
}

impl TargetModel for GaussianTarget {
    fn dim(&self) -> usize {
        1
    }

    fn sample_prior_one(&self, rng: &mut StreamRng) -> Vec<f64> {
        vec![rng.sample(StandardNormal)]
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        -0.5 * theta[0] * theta[0]
    }

    fn log_likelihood(&self, theta: &[f64], _rng: &mut StreamRng) -> f64 {
        -0.5 * (self.y - theta[0]).powi(2)
    }
}

type TestFn = fn(&[f64]) -> f64;

fn unit_indicator(x: &[f64]) -> f64 {
    f64::from(u8::from((0.0..=1.0).contains(&x[0])))
}

fn cosine(x: &[f64]) -> f64 {
    x[0].cos()
}

/// Bounded test functions with the interval each is smooth on; outside the
/// interval the integrand vanishes or is negligible.
pub const TEST_FUNCTIONS: [(&str, TestFn); 2] = [("indicator_0_1", unit_indicator), ("cos", cosine)];

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Posterior expectations of [`TEST_FUNCTIONS`] by quadrature.
pub fn quadrature_truths(target: &GaussianTarget) -> [f64; 2] {
    let sd = GaussianTarget::POSTERIOR_VARIANCE.sqrt();
    let (lo, hi) = (target.posterior_mean() - 14.0 * sd, target.posterior_mean() + 14.0 * sd);
    let density = |x: f64| target.posterior_density(x);
    [
        simpson(density, 0.0, 1.0, 2_000),
        simpson(|x| x.cos() * density(x), lo, hi, 20_000),
    ]
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub truths: [f64; 2],
    /// Plain importance sampling, one row per function and `M`.
    pub identity: Vec<ConvergenceRow>,
    /// Hard clipping of the `ceil(sqrt(M))` largest weights, same draws.
    pub clipped: Vec<ConvergenceRow>,
    pub repetitions: usize,
}

impl ConvergenceReport {
    /// Least-squares slope of `log err_bar_vs_std` against `log M` over the
    /// clipped rows of `function`.
    pub fn log_log_slope(&self, function: usize) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .clipped
            .iter()
            .filter(|r| r.function == function)
            .map(|r| ((r.m as f64).ln(), r.err_bar_vs_std.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

pub fn clip_count_for(m: usize) -> usize {
    (m as f64).sqrt().ceil() as usize
}

/// Both transforms read stream `root(seed)`, so they see identical draws.
/// Writes `convergence.csv`.
pub fn run_convergence(common: &CommonArgs, cfg: &ConvergenceConfig) -> Result<ConvergenceReport, RunError> {
    cfg.validate()?;
    let target = GaussianTarget { y: 1.0 };
    let truths = quadrature_truths(&target);
    let functions: Vec<TestFn> = TEST_FUNCTIONS.iter().map(|f| f.1).collect();
    let stream = RngStream::root(common.seed);
    let identity = convergence_error_curves(&target, &functions, &truths, &cfg.m_grid, None, cfg.repetitions, stream)?;
    let rule = clip_count_for;
    let clipped = convergence_error_curves(
        &target,
        &functions,
        &truths,
        &cfg.m_grid,
        Some(&rule),
        cfg.repetitions,
        stream,
    )?;
    let report = ConvergenceReport {
        truths,
        identity,
        clipped,
        repetitions: cfg.repetitions,
    };
    let rows: Vec<Vec<String>> = report
        .identity
        .iter()
        .map(|r| ("identity", r))
        .chain(report.clipped.iter().map(|r| ("clip_hard", r)))
        .map(|(name, r)| {
            vec![
                name.to_string(),
                TEST_FUNCTIONS[r.function].0.to_string(),
                r.m.to_string(),
                r.clip_count.map(|c| c.to_string()).unwrap_or_default(),
                num(r.err_bar_vs_std),
                num(r.err_bar_vs_bridge),
                num(r.err_bridge_vs_std),
                num(r.err_bar_vs_truth),
                num(r.err_std_vs_truth),
                r.triangle_violations.to_string(),
                report.repetitions.to_string(),
            ]
        })
        .collect();
    write_table(&common.out.join("convergence.csv"), &CONVERGENCE_HEADER, &rows)?;
    Ok(report)
}
