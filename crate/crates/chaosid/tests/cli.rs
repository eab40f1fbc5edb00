mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chaosid::manifest::{RunManifest, SuiteManifest};
use common::write_small_config;

fn chaosid(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaosid")).env("CHAOSID_OUT", out).args(args).output().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn simulate_rest_state_is_constant() {
    let out = tempfile::tempdir().unwrap();
    let o = chaosid(out.path(), &["simulate", "--h", "0", "--start", "rest", "--steps", "50", "--k", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.path().join("trajectory.csv"));
    assert_eq!(rows[0], ["time", "X1", "X2", "X3", "X4", "X5"]);
    assert_eq!(rows.len(), 51);
    assert!(rows[1..].iter().all(|r| r[1..].iter().all(|v| v == "10.0")));
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(chaosid(d.path(), &["simulate", "--seed", "4", "--steps", "120"]).status.success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(csv_rows(&a.path().join("trajectory.csv")).len(), 121);
}

#[test]
fn simulate_divergence_fails_with_message() {
    let out = tempfile::tempdir().unwrap();
    let o = chaosid(out.path(), &["simulate", "--dt", "0.5", "--substeps", "1", "--h", "2", "--steps", "500"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("simulation") && err.contains("diverged"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let out = tempfile::tempdir().unwrap();
    for args in [
        &["gen-data", "--id", "9"][..],
        &["gen-data", "--id", "0"],
        &["run", "--id", "1", "--models", "gp,svm"],
        &["run", "--id", "1", "--models", ""],
        &["frobnicate"],
    ] {
        assert_eq!(chaosid(out.path(), args).status.code(), Some(2), "{args:?}");
    }
    let bad = out.path().join("bad.json");
    fs::write(&bad, r#"{"settings": {"binz": 3}}"#).unwrap();
    let o = chaosid(out.path(), &["--config", bad.to_str().unwrap(), "run", "--id", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_data_writes_split_files() {
    let out = tempfile::tempdir().unwrap();
    let cfg = write_small_config(out.path());
    let o = chaosid(out.path(), &["--config", cfg.to_str().unwrap(), "gen-data", "--id", "2", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out.path().join("exp2/dataset");
    let train = csv_rows(&dir.join("train.csv"));
    assert_eq!(train[0], ["x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "h"]);
    assert_eq!(train.len() - 1, 20 * 5);
    assert_eq!(csv_rows(&dir.join("test.csv")).len() - 1, 4 * 5);
    let first = fs::read(dir.join("train.csv")).unwrap();
    assert!(chaosid(out.path(), &["--config", cfg.to_str().unwrap(), "gen-data", "--id", "2", "--seed", "3"]).status.success());
    assert_eq!(first, fs::read(dir.join("train.csv")).unwrap());
}

#[test]
fn run_single_model_writes_outputs() {
    let out = tempfile::tempdir().unwrap();
    let cfg = write_small_config(out.path());
    let args = ["--config", cfg.to_str().unwrap(), "run", "--id", "1", "--models", "gp", "--seed", "2", "--bins", "10"];
    let o = chaosid(out.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out.path().join("exp1");
    let metrics = csv_rows(&dir.join("metrics.csv"));
    assert_eq!(metrics.len(), 2);
    assert_eq!(metrics[0], ["model", "mse", "mae", "r2", "bhattacharyya", "pearson"]);
    assert_eq!(metrics[1][0], "gp");
    assert!(metrics[1][1..].iter().all(|v| v.parse::<f64>().unwrap().is_finite()));

    let pdf = csv_rows(&dir.join("pdf.csv"));
    assert_eq!(pdf.len(), 11);
    assert!(pdf[1..].iter().all(|r| !r[2].is_empty() && r[3].is_empty() && r[4].is_empty()));
    assert_eq!(csv_rows(&dir.join("error_growth.csv")).len(), 22);
    assert_eq!(csv_rows(&dir.join("uncertainty.csv")).len(), 21);

    let manifest: RunManifest = serde_json::from_slice(&fs::read(dir.join("run_manifest.json")).unwrap()).unwrap();
    assert!(manifest.gp_hyperparameters.is_some() && !manifest.dataset_from_cache);
    assert_eq!(manifest.settings.bins, 10);
    for f in &manifest.outputs {
        assert!(dir.join(f).is_file(), "{f} listed but missing");
    }
    let again = chaosid(out.path(), &args);
    assert!(again.status.success());
    let manifest: RunManifest = serde_json::from_slice(&fs::read(dir.join("run_manifest.json")).unwrap()).unwrap();
    assert!(manifest.dataset_from_cache);
}

#[test]
fn cached_and_fresh_runs_agree() {
    let out = tempfile::tempdir().unwrap();
    let cfg = write_small_config(out.path());
    let base = ["--config", cfg.to_str().unwrap(), "run", "--id", "3", "--seed", "8"];
    let mut files = Vec::new();
    for extra in [&[][..], &[], &["--no-cache"]] {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        assert!(chaosid(out.path(), &args).status.success());
        files.push(["metrics.csv", "pdf.csv", "error_growth.csv", "uncertainty.csv"].map(|f| fs::read(out.path().join("exp3").join(f)).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn reproduce_all_records_failures() {
    let out = tempfile::tempdir().unwrap();
    // LATE windows end at step 4000, so shortening the retained series breaks
    // exactly the even-numbered experiments.
    let cfg = out.path().join("short.json");
    fs::write(
        &cfg,
        r#"{ "experiment": { "n_sims": 12, "holdout_sims": 2, "n_keep": 1500 },
             "settings": { "search": { "grid_points": 2, "nm_evaluations": 10 }, "train": { "epochs": 5 },
                           "pdf_samples_per_point": 5, "growth_samples_per_point": 1, "horizon_mtu": 0.5 } }"#,
    )
    .unwrap();
    let o = chaosid(out.path(), &["--config", cfg.to_str().unwrap(), "reproduce-all", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.path().join("summary.csv"));
    assert_eq!(rows[0][..2], ["experiment".to_string(), "model".to_string()]);
    assert_eq!(rows.len(), 25);
    for r in &rows[1..] {
        let id: u8 = r[0].parse().unwrap();
        if id % 2 == 0 {
            assert!(r[11].starts_with("failed") && r[6].is_empty(), "{r:?}");
        } else {
            assert_eq!(r[11], "ok");
            assert!(r[6].parse::<f64>().is_ok());
        }
    }
    let suite: SuiteManifest = serde_json::from_slice(&fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(suite.failed, vec![2, 4, 6, 8]);
    for f in &suite.outputs {
        assert!(out.path().join(f).is_file(), "{f} listed but missing");
    }
}
