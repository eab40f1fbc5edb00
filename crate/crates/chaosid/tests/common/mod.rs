#![allow(dead_code)]

use std::path::Path;

use chaosid::config::RunConfig;

pub const SMALL_CONFIG: &str = r#"{
  "experiment": { "n_sims": 24, "holdout_sims": 4 },
  "settings": {
    "search": { "grid_points": 3, "nm_evaluations": 30 },
    "train": { "epochs": 20 },
    "pdf_samples_per_point": 20,
    "growth_samples_per_point": 2
  }
}"#;

pub fn small_config() -> RunConfig {
    serde_json::from_str(SMALL_CONFIG).unwrap()
}

pub fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("small.json");
    std::fs::write(&p, SMALL_CONFIG).unwrap();
    p
}
