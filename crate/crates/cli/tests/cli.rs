use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use excl::report::{summary_csv, summary_table};
use excl::{run_experiment, ExperimentConfig, ExperimentKind};
use excl_core::Pattern;

fn excl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excl")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const THETA: &str = r#"{"schema_version": 1, "model": {"type": "knn", "k": 1, "d": 2}, "samples": 20000, "seed": 11}"#;

#[test]
fn theta_run_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "theta.json", THETA);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out_a = excl(&["theta", "--config", &cfg, "--threads", "1", "--out", a.to_str().unwrap()]);
    let out_b = excl(&["theta", "--config", &cfg, "--threads", "3", "--out", b.to_str().unwrap()]);
    assert_eq!(out_a.status.code(), Some(0), "{}", String::from_utf8_lossy(&out_a.stderr));
    assert_eq!(out_b.status.code(), Some(0));
    let ra = fs::read(a.join("records.jsonl")).unwrap();
    assert_eq!(ra, fs::read(b.join("records.jsonl")).unwrap());

    let first: serde_json::Value = serde_json::from_slice(ra.split(|c| *c == b'\n').nth(1).unwrap()).unwrap();
    assert_eq!(first["metric"], "theta_first_max");
    assert!((first["value"].as_f64().unwrap() - 0.5).abs() < 0.02);
    assert!(first.get("wall_time").is_none());
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "theta.json", THETA);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    excl(&["theta", "--config", &cfg, "--out", a.to_str().unwrap()]);
    excl(&["theta", "--config", &cfg, "--seed", "12", "--out", b.to_str().unwrap()]);
    let ra = fs::read_to_string(a.join("records.jsonl")).unwrap();
    let rb = fs::read_to_string(b.join("records.jsonl")).unwrap();
    assert_ne!(ra, rb);
    assert!(rb.contains("\"seed\":12"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"schema_version": 1, "model": {"type": "knn", "k": 1, "d": 2}, "tau": [10, -4]}"#,
    );
    let out = excl(&["limit-law", "--config", &bad, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau[1]"));

    let typo = write_config(dir.path(), "typo.json", r#"{"schema_version": 1, "model": {"type": "knn", "k": 1, "d": 2}, "replicates": "many"}"#);
    let out = excl(&["theta", "--config", &typo]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicates"));

    let other = write_config(dir.path(), "other.json", r#"{"schema_version": 1, "experiment": "theta", "model": {"type": "knn", "k": 1, "d": 2}}"#);
    assert_eq!(excl(&["metric-bench", "--config", &other]).status.code(), Some(2));
    assert_eq!(excl(&["theta", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(excl(&["no-such-kind", "--config", &other]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    // one block per window: at most one cluster per replicate, so the
    // Poisson count checks must fail
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coarse.json",
        r#"{"schema_version": 1, "model": {"type": "knn", "k": 1, "d": 2}, "tau": [10], "b_tau": 10, "replicates": 400}"#,
    );
    let out = excl(&["limit-law", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn plot_cdf_columns_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "limit.json",
        r#"{"schema_version": 1, "model": {"type": "knn", "k": 1, "d": 2}, "tau": [20], "replicates": 200}"#,
    );
    let o = dir.path().join("o");
    excl(&["limit-law", "--config", &cfg, "--out", o.to_str().unwrap()]);
    for name in ["frechet_pp_tau20.dat", "weibull_pp_tau20.dat"] {
        let text = fs::read_to_string(o.join(name)).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 200);
        for w in rows.windows(2) {
            assert!(w[0][0] <= w[1][0] && w[0][1] <= w[1][1], "{name}: {:?}", w);
        }
    }
}

#[test]
fn dumps_are_pattern_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tail.json",
        r#"{"schema_version": 1, "model": {"type": "knn", "k": 2, "d": 2}, "tau": [15], "replicates": 20}"#,
    );
    let o = dir.path().join("o");
    let out = excl(&["tail-extract", "--config", &cfg, "--dump", "--out", o.to_str().unwrap()]);
    assert!(out.status.code().unwrap() <= 1);
    let tail_dir = o.join("dump/tail/tau15");
    let files: Vec<_> = fs::read_dir(&tail_dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files {
        let p = Pattern::from_csv(&fs::read_to_string(&f).unwrap()).unwrap();
        assert_eq!(p.origin_index().map(|i| p.score(i) > 1.0), Some(true));
    }
}

#[test]
fn one_record_gives_one_row() {
    let mut cfg = ExperimentConfig::from_json(THETA).unwrap();
    cfg.experiment = Some(ExperimentKind::Theta);
    cfg.samples = Some(500);
    let out = run_experiment(&cfg).unwrap();
    let one = &out.records[1..2];
    assert_eq!(summary_table(one).lines().count(), 2);
    assert_eq!(summary_csv(one).lines().count(), 2);
    assert_eq!(summary_table(&out.records).lines().count(), out.records.len() + 1);
}

#[test]
fn theta_sweep_matches_closed_forms() {
    let cfg = ExperimentConfig::from_json(
        r#"{"schema_version": 1, "experiment": "theta", "model": {"type": "knn", "k": 2, "d": 2}, "samples": 20000, "dims": [1, 2, 3, 4]}"#,
    )
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    let checks: Vec<_> = out.records.iter().filter(|r| r.metric == "theta_first_max").collect();
    assert_eq!(checks.len(), 4);
    assert!(checks.iter().all(|r| r.pass == Some(true)), "{checks:?}");
    let sweep = out.plots.iter().find(|p| p.name == "theta_sweep").unwrap();
    assert_eq!(sweep.rows.len(), 4);
}
