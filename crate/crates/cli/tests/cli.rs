use std::path::Path;
use std::process::Command;

use npmc_cli::output::{read_table, read_trajectory, SCHEMA_LINE};
use npmc_cli::{run, ExperimentConfig, Report};

fn npmc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_npmc")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Report {
    let out = dir.to_str().unwrap();
    let mut argv = vec!["npmc", "--out", out];
    argv.extend_from_slice(args);
    run(&ExperimentConfig::parse_with_file(argv).unwrap()).unwrap()
}

const GMM_SMOKE: [&str; 11] = [
    "gmm", "--runs", "2", "--m", "20", "--iterations", "2", "--clip-count", "5", "--min-eff", "10",
];

#[test]
fn degeneracy_single_cell_creates_missing_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested").join("dir");
    let Report::Degeneracy(cells) = run_in(&out, &["degeneracy", "--n-grid", "1", "--m-grid", "4", "--runs", "1"]) else {
        panic!()
    };
    assert_eq!(cells.len(), 1);
    let rows = read_table(&out.join("degeneracy.csv"), &["N", "M", "mean_max_weight", "mean_ess"]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((&rows[0][0], &rows[0][1]), ("1", "4"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_in(a.path(), &GMM_SMOKE);
    run_in(b.path(), &GMM_SMOKE);
    for name in ["gmm_summary.csv", "gmm_final.csv"] {
        let bytes = std::fs::read(a.path().join(name)).unwrap();
        assert!(bytes.starts_with(SCHEMA_LINE.as_bytes()));
        assert_eq!(bytes, std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_in(a.path(), &["--threads", "1", "convergence", "--m-grid", "100,1000", "--repetitions", "4"]);
    run_in(b.path(), &["--threads", "4", "convergence", "--m-grid", "100,1000", "--repetitions", "4"]);
    let read = |d: &Path| std::fs::read(d.join("convergence.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn convergence_identity_rows_have_no_transform_error() {
    let tmp = tempfile::tempdir().unwrap();
    let Report::Convergence(r) = run_in(tmp.path(), &["convergence", "--m-grid", "100,400", "--repetitions", "3"]) else {
        panic!()
    };
    assert!(r.identity.iter().all(|row| row.err_bar_vs_std == 0.0 && row.clip_count.is_none()));
    assert!(r.clipped.iter().all(|row| row.triangle_violations == 0));
}

#[test]
fn skm_smoke_run_reloads_its_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "skm", "--runs", "1", "--m", "100", "--iterations", "2", "--j-particles", "20", "--clip-count", "20",
        "--retries", "0", "--max-events", "100000",
    ];
    let Report::Skm(r) = run_in(tmp.path(), &args) else { panic!() };
    assert_eq!(r.runs.len(), 1);
    assert_eq!(r.runs[0].attempts, 1);
    let traj = read_trajectory(&tmp.path().join("skm_trajectory.csv")).unwrap();
    assert_eq!(traj.x0(), [71, 79]);
    assert_eq!(traj.horizon(), 40.0);
    for name in ["skm_observations.csv", "skm_summary.csv", "skm_scatter.csv"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();

    let ok = npmc(&["--out", out, "degeneracy", "--n-grid", "1", "--m-grid", "4", "--runs", "1"]);
    assert_eq!(ok.status.code(), Some(0));

    let usage = npmc(&["--out", out, "gmm", "--bogus", "1"]);
    assert_eq!(usage.status.code(), Some(2));

    let invalid = npmc(&["--out", out, "gmm", "--m", "20", "--clip-count", "5"]);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("min_eff"));

    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "runs = 0\n").unwrap();
    let from_file = npmc(&["--out", out, "--config", cfg.to_str().unwrap(), "gmm"]);
    assert_eq!(from_file.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&from_file.stderr).contains("runs"));
}
