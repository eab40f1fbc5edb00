//! Experiment grid and regime-windowed snapshot datasets.
//!
//! Each experiment runs `n_sims` independent simulations. Simulation `s` uses
//! the stream seeded by [`child_seed(master_seed, s)`](crate::rng::child_seed):
//! it draws `(b, c, h)` from the prior, then the initial state, integrates,
//! and cuts `snapshots_per_sim` slices of length `snapshot_len` out of the
//! `X₁` series inside the regime window. The last `holdout_sims` simulations
//! form the test split.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynsys::{integrate_substepped, random_initial_state, L96Params, L96State, Trajectory};
use crate::exec::{Executor, Sequential};
use crate::linalg::Matrix;
use crate::rng::{child_seed, seeded};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    /// 5 < MTU < 7 of the retained series.
    Early,
    /// MTU > 15 of the retained series.
    Late,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Early => "EARLY",
            Regime::Late => "LATE",
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EARLY" | "early" => Ok(Regime::Early),
            "LATE" | "late" => Ok(Regime::Late),
            other => Err(Error::Config(format!("unknown regime {other:?}"))),
        }
    }
}

/// Steps per model time unit at the reference step size 0.005.
pub const STEPS_PER_MTU: usize = 200;

/// Plain RK4 at `dt = 0.005` diverges for strong coupling (h near 2), where
/// the fast variables grow past its stability limit.
pub const DEFAULT_SUBSTEPS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: u8,
    pub k: usize,
    pub j: usize,
    pub forcing: f64,
    pub regime: Regime,
    pub n_sims: usize,
    pub snapshot_len: usize,
    pub snapshots_per_sim: usize,
    pub dt: f64,
    /// RK4 steps per output step of size `dt`.
    pub substeps: usize,
    pub n_keep: usize,
    pub n_discard: usize,
    pub holdout_sims: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Row `id` (1..=8) of the experiment grid with default sizes.
    pub fn for_id(id: u8, master_seed: u64) -> Result<Self> {
        if !(1..=8).contains(&id) {
            return Err(Error::Config(format!("experiment id must be in 1..=8, got {id}")));
        }
        let i = (id - 1) as usize;
        let (k, j) = if i < 4 { (4, 4) } else { (8, 8) };
        let forcing = if (i / 2) % 2 == 0 { 10.0 } else { 20.0 };
        let regime = if i % 2 == 0 { Regime::Early } else { Regime::Late };
        Ok(ExperimentConfig {
            id,
            k,
            j,
            forcing,
            regime,
            n_sims: 200,
            snapshot_len: 10,
            snapshots_per_sim: 5,
            dt: 0.005,
            substeps: DEFAULT_SUBSTEPS,
            n_keep: 4000,
            n_discard: 1000,
            holdout_sims: 16,
            master_seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 || self.snapshot_len == 0 || self.snapshots_per_sim == 0 || self.substeps == 0 {
            return Err(Error::Config("simulation, snapshot, length and substep counts must be positive".into()));
        }
        if self.holdout_sims >= self.n_sims {
            return Err(Error::Config(format!(
                "holdout_sims ({}) must be smaller than n_sims ({})",
                self.holdout_sims, self.n_sims
            )));
        }
        let (start, end) = regime_window(self.regime, self.dt);
        if end > self.n_keep {
            return Err(Error::Config(format!("regime window ends at {end}, beyond n_keep = {}", self.n_keep)));
        }
        if self.snapshots_per_sim * self.snapshot_len > end - start {
            return Err(Error::Config(format!(
                "{} snapshots of length {} do not fit in a window of {}",
                self.snapshots_per_sim,
                self.snapshot_len,
                end - start
            )));
        }
        Ok(())
    }

    pub fn n_train_sims(&self) -> usize {
        self.n_sims - self.holdout_sims
    }
}

/// The eight experiments: `(K, J) × F × regime`, in table order.
pub fn experiment_grid(master_seed: u64) -> Vec<ExperimentConfig> {
    (1..=8).map(|id| ExperimentConfig::for_id(id, master_seed).expect("ids 1..=8 are valid")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterPrior {
    pub h_low: f64,
    pub h_high: f64,
    pub b_value: f64,
    pub c_value: f64,
}

impl Default for ParameterPrior {
    fn default() -> Self {
        ParameterPrior { h_low: 0.0, h_high: 2.0, b_value: 10.0, c_value: 10.0 }
    }
}

impl ParameterPrior {
    /// A degenerate support (`h_low == h_high`) is accepted and always yields that value.
    pub fn validate(&self) -> Result<()> {
        if !(self.h_low <= self.h_high) || !self.h_low.is_finite() || !self.h_high.is_finite() {
            return Err(Error::Config(format!("invalid h support [{}, {}]", self.h_low, self.h_high)));
        }
        if !(self.b_value > 0.0) || !(self.c_value > 0.0) {
            return Err(Error::Config("b and c must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledParameters {
    pub b: f64,
    pub c: f64,
    pub h: f64,
}

pub fn sample_parameters<R: Rng + ?Sized>(prior: &ParameterPrior, rng: &mut R) -> SampledParameters {
    let u: f64 = rng.random();
    let h = if prior.h_low == prior.h_high { prior.h_low } else { prior.h_low + u * (prior.h_high - prior.h_low) };
    SampledParameters { b: prior.b_value, c: prior.c_value, h }
}

/// Half-open index range into the retained series.
///
/// MTU boundaries are converted at `1/dt` steps per MTU, measured from the
/// first retained state.
pub fn regime_window(regime: Regime, dt: f64) -> (usize, usize) {
    let per_mtu = libm::round(1.0 / dt) as usize;
    match regime {
        Regime::Early => (5 * per_mtu, 7 * per_mtu),
        Regime::Late => (15 * per_mtu, 20 * per_mtu),
    }
}

/// Start offsets of `count` evenly spaced slices of length `len` in `[start, end)`.
pub fn snapshot_offsets(window: (usize, usize), count: usize, len: usize) -> Result<Vec<usize>> {
    let (start, end) = window;
    if end < start || count == 0 || len == 0 || count * len > end - start {
        return Err(Error::Config(format!(
            "cannot place {count} snapshots of length {len} in window [{start}, {end})"
        )));
    }
    if count == 1 {
        return Ok(alloc::vec![start]);
    }
    let span = end - start - len;
    Ok((0..count).map(|i| start + i * span / (count - 1)).collect())
}

/// `count × len` matrix of non-overlapping slices of `series` within `window`.
pub fn extract_snapshots(series: &[f64], window: (usize, usize), count: usize, len: usize) -> Result<Matrix> {
    if window.1 > series.len() {
        return Err(Error::Config(format!(
            "window end {} exceeds series length {}",
            window.1,
            series.len()
        )));
    }
    let offsets = snapshot_offsets(window, count, len)?;
    Matrix::from_rows(len, offsets.iter().map(|&o| &series[o..o + len]))
}

/// One simulation's contribution to a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSample {
    pub index: usize,
    pub params: SampledParameters,
    pub initial: L96State,
    pub snapshots: Matrix,
}

pub fn simulation_params(config: &ExperimentConfig, sampled: SampledParameters) -> Result<L96Params> {
    L96Params::new(config.k, config.j, config.forcing, sampled.b, sampled.c, sampled.h)
}

/// Parameters, initial state and full retained trajectory of simulation `index`.
pub fn simulate(
    config: &ExperimentConfig,
    prior: &ParameterPrior,
    index: usize,
) -> Result<(SampledParameters, L96State, Trajectory)> {
    let mut rng = seeded(child_seed(config.master_seed, index as u64));
    let sampled = sample_parameters(prior, &mut rng);
    let params = simulation_params(config, sampled)?;
    let initial = random_initial_state(&params, &mut rng);
    let traj = integrate_substepped(&initial, &params, config.dt, config.substeps, config.n_keep, config.n_discard).map_err(|e| match e {
        Error::Diverged { step } => Error::SimulationDiverged { simulation: index, step },
        other => other,
    })?;
    Ok((sampled, initial, traj))
}

pub fn generate_simulation(config: &ExperimentConfig, prior: &ParameterPrior, index: usize) -> Result<SimulationSample> {
    let (params, initial, traj) = simulate(config, prior, index)?;
    let series = traj.x_series(0);
    let snapshots = extract_snapshots(
        &series,
        regime_window(config.regime, config.dt),
        config.snapshots_per_sim,
        config.snapshot_len,
    )?;
    Ok(SimulationSample { index, params, initial, snapshots })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: ExperimentConfig,
    pub prior: ParameterPrior,
    /// Name and version of the generating library.
    pub created_by: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Raw `X₁` snapshots, one row per snapshot, simulations in order.
    pub train_features: Matrix,
    pub train_targets: Vec<f64>,
    pub test_features: Matrix,
    pub test_targets: Vec<f64>,
    /// Column means of the train features.
    pub feature_mean: Vec<f64>,
    /// Column population standard deviations of the train features.
    pub feature_std: Vec<f64>,
    pub manifest: DatasetManifest,
}

pub const CREATED_BY: &str = concat!("chaosid-core ", env!("CARGO_PKG_VERSION"));

/// Column means and population standard deviations.
pub fn column_stats(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows() as f64;
    let mean: Vec<f64> = (0..m.cols()).map(|j| m.row_iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let std = (0..m.cols())
        .map(|j| libm::sqrt(m.row_iter().map(|r| (r[j] - mean[j]) * (r[j] - mean[j])).sum::<f64>() / n))
        .collect();
    (mean, std)
}

/// Scale used for a column with the given standard deviation; constant columns are not scaled.
#[inline]
fn column_scale(std: f64) -> f64 {
    if std > 0.0 {
        std
    } else {
        1.0
    }
}

impl Dataset {
    pub fn config(&self) -> &ExperimentConfig {
        &self.manifest.config
    }

    /// z-scores `m` with the train statistics.
    pub fn standardize(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.feature_mean.len() {
            return Err(Error::DimensionMismatch { expected: self.feature_mean.len(), got: m.cols() });
        }
        let mut out = m.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.feature_mean[j]) / column_scale(self.feature_std[j]);
            }
        }
        Ok(out)
    }

    pub fn standardized_train(&self) -> Matrix {
        self.standardize(&self.train_features).expect("train features match their own statistics")
    }

    pub fn standardized_test(&self) -> Matrix {
        self.standardize(&self.test_features).expect("test features share the train width")
    }

    /// Simulation index of each train row.
    pub fn train_simulations(&self) -> Vec<usize> {
        let per = self.config().snapshots_per_sim;
        (0..self.train_features.rows()).map(|r| r / per).collect()
    }

    /// Simulation index of each test row.
    pub fn test_simulations(&self) -> Vec<usize> {
        let cfg = self.config();
        (0..self.test_features.rows()).map(|r| cfg.n_train_sims() + r / cfg.snapshots_per_sim).collect()
    }
}

/// Assembles a dataset from per-simulation samples given in simulation order.
pub fn assemble_dataset(
    config: &ExperimentConfig,
    prior: &ParameterPrior,
    samples: &[SimulationSample],
) -> Result<Dataset> {
    if samples.len() != config.n_sims {
        return Err(Error::DimensionMismatch { expected: config.n_sims, got: samples.len() });
    }
    let n_train = config.n_train_sims();
    let rows_of = |part: &[SimulationSample]| {
        Matrix::from_rows(config.snapshot_len, part.iter().flat_map(|s| s.snapshots.row_iter()))
    };
    let targets_of = |part: &[SimulationSample]| {
        part.iter().flat_map(|s| core::iter::repeat(s.params.h).take(s.snapshots.rows())).collect::<Vec<_>>()
    };
    let (train, test) = samples.split_at(n_train);
    let train_features = rows_of(train)?;
    let (feature_mean, feature_std) = column_stats(&train_features);
    Ok(Dataset {
        train_targets: targets_of(train),
        test_features: rows_of(test)?,
        test_targets: targets_of(test),
        train_features,
        feature_mean,
        feature_std,
        manifest: DatasetManifest { config: config.clone(), prior: *prior, created_by: String::from(CREATED_BY) },
    })
}

pub fn generate_dataset(config: &ExperimentConfig, prior: &ParameterPrior) -> Result<Dataset> {
    generate_dataset_with(config, prior, &Sequential)
}

/// Same result as [`generate_dataset`] for every executor.
pub fn generate_dataset_with<E: Executor>(
    config: &ExperimentConfig,
    prior: &ParameterPrior,
    exec: &E,
) -> Result<Dataset> {
    config.validate()?;
    prior.validate()?;
    let samples: Vec<SimulationSample> = exec
        .map_indexed(config.n_sims, |s| generate_simulation(config, prior, s))
        .into_iter()
        .collect::<Result<_>>()?;
    assemble_dataset(config, prior, &samples)
}
