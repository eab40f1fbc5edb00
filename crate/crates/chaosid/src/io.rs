//! Dataset files: `train.csv` and `test.csv` with columns `x0..x{L-1},h`,
//! plus `manifest.json` holding the experiment configuration, the prior
//! and the train standardization statistics.

use std::fs;
use std::path::{Path, PathBuf};

use chaosid_core::datagen::{column_stats, Dataset, DatasetManifest, ExperimentConfig, ParameterPrior};
use chaosid_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// On-disk form of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFileManifest {
    #[serde(flatten)]
    pub config: ExperimentConfig,
    pub prior: ParameterPrior,
    pub standardization: Standardization,
    pub n_train: usize,
    pub n_test: usize,
    pub created_by: String,
}

pub fn feature_header(len: usize) -> Vec<String> {
    (0..len).map(|i| format!("x{i}")).chain(std::iter::once("h".to_string())).collect()
}

/// Formats a float with the shortest representation that parses back exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn write_split(path: &Path, features: &Matrix, targets: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(feature_header(features.cols())).map_err(|e| csv_error(path, e))?;
    for (row, h) in features.row_iter().zip(targets) {
        let rec = row.iter().chain(std::iter::once(h)).map(|v| fmt_f64(*v));
        w.write_record(rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    write_split(&dir.join(TRAIN_FILE), &ds.train_features, &ds.train_targets)?;
    write_split(&dir.join(TEST_FILE), &ds.test_features, &ds.test_targets)?;
    let manifest = DatasetFileManifest {
        config: ds.manifest.config.clone(),
        prior: ds.manifest.prior,
        standardization: Standardization { mean: ds.feature_mean.clone(), std: ds.feature_std.clone() },
        n_train: ds.train_targets.len(),
        n_test: ds.test_targets.len(),
        created_by: ds.manifest.created_by.clone(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let mpath = dir.join(MANIFEST_FILE);
    let m: DatasetFileManifest = read_json(&mpath)?;
    let len = m.config.snapshot_len;
    let train_path = dir.join(TRAIN_FILE);
    let (train_features, train_targets) = read_split(&train_path, len, m.n_train)?;
    let (test_features, test_targets) = read_split(&dir.join(TEST_FILE), len, m.n_test)?;
    let (mean, std) = column_stats(&train_features);
    if mean != m.standardization.mean || std != m.standardization.std {
        return Err(Error::Format {
            path: mpath,
            line: 0,
            message: format!("standardization statistics do not match {}", train_path.display()),
        });
    }
    Ok(Dataset {
        train_features,
        train_targets,
        test_features,
        test_targets,
        feature_mean: mean,
        feature_std: std,
        manifest: DatasetManifest { config: m.config, prior: m.prior, created_by: m.created_by },
    })
}

fn read_split(path: &Path, len: usize, expected_rows: usize) -> Result<(Matrix, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    if header != feature_header(len) {
        return Err(Error::Format {
            path: path.into(),
            line: 1,
            message: format!("expected header {:?}, found {header:?}", feature_header(len).join(",")),
        });
    }
    let mut data = Vec::with_capacity(expected_rows * len);
    let mut targets = Vec::with_capacity(expected_rows);
    let mut last_line = 1;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        last_line = line;
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Format {
                path: path.into(),
                line,
                message: format!("column {}: {field:?} is not a number", i + 1),
            })?;
            if i < len {
                data.push(v);
            } else {
                targets.push(v);
            }
        }
    }
    if targets.len() != expected_rows {
        return Err(Error::Format {
            path: path.into(),
            line: last_line + 1,
            message: format!("expected {expected_rows} data rows, found {}", targets.len()),
        });
    }
    Ok((Matrix::from_vec(targets.len(), len, data)?, targets))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.into(), source },
        kind => Error::Format { path: path.into(), line, message: csv_kind_message(kind) },
    }
}

fn csv_kind_message(kind: csv::ErrorKind) -> String {
    match kind {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        other => format!("{other:?}"),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::json(path))?;
    text.push('\n');
    fs::write(path, text).map_err(Error::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: PathBuf::from(path),
        line: e.line() as u64,
        message: e.to_string(),
    })
}
