//! Dataset cache under `<out>/cache/<key>/`, keyed by a SHA-256 of the
//! experiment configuration (which carries the seed), the prior and the
//! generator version.

use std::fs;
use std::path::{Path, PathBuf};

use chaosid_core::datagen::{generate_dataset_with, Dataset, ExperimentConfig, ParameterPrior, CREATED_BY};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Rayon;
use crate::io::{load_dataset, save_dataset};

pub fn cache_key(config: &ExperimentConfig, prior: &ParameterPrior) -> String {
    let payload = serde_json::to_vec(&(config, prior, CREATED_BY)).expect("configuration serializes");
    hex::encode(Sha256::digest(payload))
}

pub fn cache_dir(out: &Path, key: &str) -> PathBuf {
    out.join("cache").join(key)
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Generated,
    Cached(PathBuf),
}

/// Loads the cached dataset if present, otherwise generates and stores it.
/// An unreadable cache entry is regenerated.
pub fn dataset(out: &Path, config: &ExperimentConfig, prior: &ParameterPrior) -> Result<(Dataset, Source, String)> {
    let key = cache_key(config, prior);
    let dir = cache_dir(out, &key);
    if dir.is_dir() {
        if let Ok(ds) = load_dataset(&dir) {
            if ds.manifest.config == *config && ds.manifest.prior == *prior {
                return Ok((ds, Source::Cached(dir), key));
            }
        }
    }
    let ds = generate_dataset_with(config, prior, &Rayon).map_err(|e| e.in_stage("data generation"))?;
    let tmp = out.join("cache").join(format!(".{key}.{}", std::process::id()));
    save_dataset(&ds, &tmp)?;
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(Error::io(&dir))?;
    }
    fs::rename(&tmp, &dir).map_err(Error::io(&dir))?;
    Ok((ds, Source::Generated, key))
}
