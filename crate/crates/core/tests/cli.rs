use std::path::Path;
use std::process::{Command, Output};

use stationary_excursions::report::ExperimentReport;

fn exlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exlab")).args(args).output().expect("exlab runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_report(p: &Path) -> ExperimentReport {
    ExperimentReport::from_json(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn analytic_check_passes_quickly_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let t = std::time::Instant::now();
    let o = exlab(&["analytic-check", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let r = read_report(&out);
    assert_eq!(r.experiment, "analytic-check");
    assert!(r.passed() && !r.metrics.is_empty());
}

#[test]
fn invalid_parameters_and_usage_exit_two() {
    for args in [
        &["identity", "--mu", "-1"][..],
        &["identity", "--workers", "0"],
        &["identity", "--frobnicate"],
        &["identity", "--model", "ou"],
        &["identity", "--alpha-grid", "1,x"],
        &["bridge", "--dt", "0.5"],
        &["levy", "--model", "reflbm01"],
        &["teleport"],
    ] {
        let o = exlab(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn failing_metric_exits_one() {
    // 30 excursions cannot fill a uniformity bin of 3000
    let o = exlab(&["identity", "--paths", "30", "--dt", "1e-2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn identity_samples_csv_and_config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\npaths = 300\nseed = 11\ndt = 1e-2\nmin_bin_count = 5\n").unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("s.csv");
    let o = exlab(&[
        "identity",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "12",
        "--out",
        out.to_str().unwrap(),
        "--samples-out",
        csv.to_str().unwrap(),
    ]);
    assert!(matches!(code(&o), 0 | 1));
    let r = read_report(&out);
    assert_eq!((r.seed, r.n, r.dt), (12, 300, 1e-2));
    assert_eq!(r.config["paths"], "300");
    assert_eq!(r.config["min_bin_count"], "5");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("minus_g0,d0,i_plus,i_minus"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 300);
    for row in &rows {
        assert_eq!(row.len(), 4);
        // occupations of one excursion add up to its length
        assert!((row[0] + row[1] - row[2] - row[3]).abs() < 1e-9 * (row[0] + row[1]));
    }
}

#[test]
fn same_seed_different_workers_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut metrics = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("w{w}.json"));
        let o = exlab(&["bridge", "--paths", "500", "--dt", "1e-2", "--workers", w, "--out", out.to_str().unwrap()]);
        assert!(matches!(code(&o), 0 | 1));
        metrics.push(read_report(&out).metrics);
    }
    assert_eq!(metrics[0], metrics[1]);
}

#[test]
fn help_exits_zero() {
    let o = exlab(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["identity", "bridge", "rayknight", "levy", "analytic-check"] {
        assert!(text.contains(sub), "{sub}");
    }
}
