use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mvbd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvbd"))
        .args(args)
        .current_dir(dir)
        .env_remove("MVBD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_presets() {
    let dir = tempfile::tempdir().unwrap();
    ok(&mvbd(&["simulate", "--preset", "appendix-b", "--seed", "1", "--out", "."], dir.path()));
    assert_eq!(data_rows(&dir.path().join("appendix-b.csv")), 100);
    let truth = json(&dir.path().join("appendix-b.truth.json"));
    assert_eq!(truth["change_points"].as_array().unwrap().len(), 0);

    ok(&mvbd(&["simulate", "--preset", "sim3", "--censor", "0", "--out", "."], dir.path()));
    assert_eq!(data_rows(&dir.path().join("sim3.csv")), 300);
    let truth = json(&dir.path().join("sim3.truth.json"));
    let cps: Vec<u64> = truth["change_points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["t"].as_u64().unwrap())
        .collect();
    assert_eq!(cps, vec![6, 13]);
}

#[test]
fn simulate_into_missing_directory_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = mvbd(&["simulate", "--preset", "sim3", "--out", "nowhere"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(!dir.path().join("nowhere").exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mvbd(&["simulate", "--preset", "nope"], dir.path()).status.code(), Some(2));
    assert_eq!(mvbd(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(mvbd(&["--help"], dir.path()).status.code(), Some(0));
    fs::write(dir.path().join("d.csv"), "time,status\n2,1\n3,0\n").unwrap();
    let out = mvbd(&["fit", "--data", "d.csv", "--m", "1", "--iterations", "10", "--burnin", "20"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "time,status\n2,7\n").unwrap();
    let out = mvbd(&["fit", "--data", "bad.csv", "--m", "2"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    fs::write(dir.path().join("empty.csv"), "time,status\n").unwrap();
    let out = mvbd(&["fit", "--data", "empty.csv", "--m", "2"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

fn fit_small(dir: &Path, run: &str, extra: &[&str]) {
    ok(&mvbd(&["simulate", "--preset", "appendix-b", "--out", "."], dir));
    let mut args = vec![
        "fit",
        "--data",
        "appendix-b.csv",
        "--m",
        "3",
        "--iterations",
        "300",
        "--burnin",
        "100",
        "--out",
        run,
    ];
    args.extend_from_slice(extra);
    ok(&mvbd(&args, dir));
}

#[test]
fn fit_records_default_hyperparameters_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fit_small(dir.path(), "a", &[]);
    fit_small(dir.path(), "b", &["--serial-augmentation"]);
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["hyperparameters"]["mu_alpha"], -9.0);
    assert_eq!(manifest["hyperparameters"]["sigma2_alpha"], 3.0);
    assert_eq!(manifest["hyperparameters"]["pi_k"], 0.5);
    assert_eq!(manifest["n_samples"], 200);
    let a = fs::read(dir.path().join("a/samples.csv")).unwrap();
    let b = fs::read(dir.path().join("b/samples.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    ok(&mvbd(&["simulate", "--preset", "appendix-b", "--out", "."], dir.path()));
    fs::write(
        dir.path().join("run.toml"),
        "data = \"appendix-b.csv\"\nm = 3\niterations = 50\nburnin = 10\nseed = 5\nmu-alpha = -3\n",
    )
    .unwrap();
    ok(&mvbd(&["fit", "--config", "run.toml", "--seed", "6", "--out", "r"], dir.path()));
    let manifest = json(&dir.path().join("r/manifest.json"));
    assert_eq!(manifest["kernel"]["iterations"], 50);
    assert_eq!(manifest["kernel"]["seed"], 6);
    assert_eq!(manifest["hyperparameters"]["mu_alpha"], -3.0);

    fs::write(dir.path().join("bad.toml"), "itterations = 5\n").unwrap();
    let out = mvbd(&["fit", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn several_chains_write_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    fit_small(dir.path(), "run", &["--chains", "2"]);
    let manifest = json(&dir.path().join("run/manifest.json"));
    assert_eq!(manifest["n_samples"], 400);
    let seeds = manifest["chain_seeds"].as_array().unwrap();
    assert_eq!(seeds[0], 1);
    assert_ne!(seeds[1], 1);
    let a = fs::read(dir.path().join("run/samples-chain1.csv")).unwrap();
    let b = fs::read(dir.path().join("run/samples-chain2.csv")).unwrap();
    assert_ne!(a, b);
    ok(&mvbd(&["bf", "--run", "run"], dir.path()));
}

#[test]
fn summarize_and_bf_reports() {
    let dir = tempfile::tempdir().unwrap();
    fit_small(dir.path(), "run", &[]);
    ok(&mvbd(&["summarize", "--run", "run", "--profile", ""], dir.path()));
    let run = dir.path().join("run");
    assert_eq!(data_rows(&run.join("alpha_summary.csv")), 3 * 24);
    assert_eq!(data_rows(&run.join("cumulative_hazard.csv")), 3 * 24);
    let summary = json(&run.join("summary.json"));
    assert_eq!(summary["kind"], "summary");
    assert_eq!(summary["report"]["n_samples"], 200);

    let out = mvbd(&["bf", "--run", "run"], dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("B(K = 0)"));
    let bf = json(&run.join("bayes_factors.json"));
    assert!(bf["report"]["savage_dickey"]["bayes_factor"].is_number());
}

#[test]
fn bf_on_empty_samples_fails() {
    let dir = tempfile::tempdir().unwrap();
    fit_small(dir.path(), "run", &[]);
    fs::write(dir.path().join("run/samples.csv"), "").unwrap();
    let out = mvbd(&["bf", "--run", "run"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = mvbd(&["bf", "--run", "missing"], dir.path());
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn incomplete_run_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fit_small(dir.path(), "run", &[]);
    let path = dir.path().join("run/manifest.json");
    let text = fs::read_to_string(&path).unwrap().replace("\"complete\"", "\"incomplete\"");
    fs::write(&path, text).unwrap();
    assert_eq!(mvbd(&["summarize", "--run", "run"], dir.path()).status.code(), Some(3));
}

#[test]
fn prior_check_passes_and_detects_a_biased_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = mvbd(&["prior-check", "--iterations", "60000", "--out", "."], dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("prior-check: PASS"));
    assert_eq!(json(&dir.path().join("prior_check.json"))["report"]["pass"], true);

    let out = mvbd(
        &["prior-check", "--iterations", "20000", "--split-log-bias", "1.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("prior-check: FAIL"));
}
