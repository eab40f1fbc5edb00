//! JSON run configuration. Every field is optional and falls back to the
//! library defaults; command-line flags are applied on top.

use std::path::Path;

use chaosid_core::datagen::{ExperimentConfig, ParameterPrior};
use chaosid_core::pipeline::RunSettings;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::read_json;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prior: ParameterPrior,
    pub settings: RunSettings,
    pub experiment: ExperimentOverrides,
}

/// Size overrides applied to every experiment of the grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentOverrides {
    pub n_sims: Option<usize>,
    pub holdout_sims: Option<usize>,
    pub snapshots_per_sim: Option<usize>,
    pub n_keep: Option<usize>,
    pub n_discard: Option<usize>,
    pub substeps: Option<usize>,
}

impl ExperimentOverrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.n_sims, self.n_sims);
        set(&mut cfg.holdout_sims, self.holdout_sims);
        set(&mut cfg.snapshots_per_sim, self.snapshots_per_sim);
        set(&mut cfg.n_keep, self.n_keep);
        set(&mut cfg.n_discard, self.n_discard);
        set(&mut cfg.substeps, self.substeps);
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlagOverrides {
    pub bins: Option<usize>,
    pub horizon_mtu: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn with_flags(mut self, flags: FlagOverrides) -> Self {
        if let Some(b) = flags.bins {
            self.settings.bins = b;
        }
        if let Some(h) = flags.horizon_mtu {
            self.settings.horizon_mtu = h;
        }
        self
    }

    /// Configuration of experiment `id` with this run's overrides.
    pub fn experiment(&self, id: u8, seed: u64) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::for_id(id, seed)?;
        self.experiment.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}
