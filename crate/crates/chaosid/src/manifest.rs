use chaosid_core::datagen::{ExperimentConfig, ParameterPrior};
use chaosid_core::gp::SEHyperparams;
use chaosid_core::pipeline::{ModelKind, RunSeeds, RunSettings};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = concat!("chaosid ", env!("CARGO_PKG_VERSION"));

/// Record of one `run`, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment_id: u8,
    pub seed: u64,
    pub seeds: RunSeeds,
    pub experiment: ExperimentConfig,
    pub prior: ParameterPrior,
    pub settings: RunSettings,
    pub models: Vec<ModelKind>,
    pub gp_hyperparameters: Option<SEHyperparams>,
    pub gp_log_marginal_likelihood: Option<f64>,
    pub gp_coverage95: Option<f64>,
    /// `None` when caching was disabled.
    pub dataset_cache_key: Option<String>,
    pub dataset_from_cache: bool,
    pub wall_clock_seconds: f64,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

/// Record of a `reproduce-all` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub tool_version: String,
    pub seed: u64,
    pub failed: Vec<u8>,
    pub wall_clock_seconds: f64,
    /// Output files, relative to the output root.
    pub outputs: Vec<String>,
}
