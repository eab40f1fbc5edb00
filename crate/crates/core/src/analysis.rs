//! Figure-level analyses: estimated-h densities, error growth of trajectories
//! re-simulated with estimated h, and GP 95% bounds on the test split.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::baselines::{LinearModel, MLPModel, Regressor};
use crate::datagen::Dataset;
use crate::dynsys::{integrate_from, L96Params, L96State};
use crate::gp::{sample_prediction, GPModel};
use crate::metrics::{bhattacharyya, histogram, Histogram};
use crate::rng::seeded;
use crate::{Error, Matrix, Result};

/// Models fitted on one dataset. Absent models were not requested.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub gp: Option<GPModel>,
    pub mlp: Option<MLPModel>,
    pub lr: Option<LinearModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDensity {
    pub density: Vec<f64>,
    pub bhattacharyya: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfComparison {
    pub edges: Vec<f64>,
    pub density_true: Vec<f64>,
    pub gp: Option<ModelDensity>,
    pub mlp: Option<ModelDensity>,
    pub lr: Option<ModelDensity>,
}

impl PdfComparison {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

fn compare(truth: &Histogram, values: &[f64]) -> Result<ModelDensity> {
    let h = histogram(values, &truth.edges)?;
    Ok(ModelDensity { bhattacharyya: bhattacharyya(truth, &h)?, density: h.density })
}

/// Histograms of the true test targets and of each model's estimates over the
/// shared `edges`. The GP histogram pools `samples_per_point` posterior draws
/// per test point; the baselines contribute their point predictions.
pub fn estimate_h_pdf(
    models: &FittedModels,
    dataset: &Dataset,
    edges: &[f64],
    samples_per_point: usize,
    seed: u64,
) -> Result<PdfComparison> {
    if dataset.test_targets.is_empty() {
        return Err(Error::EmptySample);
    }
    let truth = histogram(&dataset.test_targets, edges)?;
    let xs = dataset.standardized_test();
    let gp = match &models.gp {
        Some(gp) => {
            let pred = gp.predict(&xs)?;
            let draws = sample_prediction(&pred, &mut seeded(seed), samples_per_point);
            Some(compare(&truth, draws.as_slice())?)
        }
        None => None,
    };
    let point = |m: &dyn Regressor| -> Result<ModelDensity> { compare(&truth, &m.predict_points(&xs)?) };
    let mlp = models.mlp.as_ref().map(|m| point(m)).transpose()?;
    let lr = models.lr.as_ref().map(|m| point(m)).transpose()?;
    Ok(PdfComparison { edges: truth.edges, density_true: truth.density, gp, mlp, lr })
}

/// Sampling grid of an error-growth curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthGrid {
    pub horizon_mtu: f64,
    pub stride_mtu: f64,
    pub dt: f64,
    /// RK4 steps per step of size `dt`.
    pub substeps: usize,
}

impl GrowthGrid {
    pub fn steps_per_sample(&self) -> usize {
        libm::round(self.stride_mtu / self.dt) as usize
    }

    pub fn n_samples(&self) -> usize {
        libm::round(self.horizon_mtu / self.stride_mtu) as usize + 1
    }

    pub fn mtu(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|i| i as f64 * self.stride_mtu).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon_mtu > 0.0) || !(self.stride_mtu > 0.0) || !(self.dt > 0.0) || self.steps_per_sample() == 0 || self.substeps == 0 {
            return Err(Error::Config(alloc::format!("invalid error-growth grid {self:?}")));
        }
        Ok(())
    }
}

/// `X₁` every `stride` steps for `n` samples, starting with the initial value.
fn x1_samples(init: &[f64], params: &L96Params, grid: &GrowthGrid) -> Result<Vec<f64>> {
    let stride = grid.steps_per_sample();
    let n = grid.n_samples();
    let dim = params.dim();
    let flat = integrate_from(init, params, grid.dt, grid.substeps, stride * (n - 1))?;
    Ok((0..n).map(|i| flat[i * stride * dim]).collect())
}

/// Mean over `h_estimates` of `|X₁^pred(t) - X₁^true(t)|`, every
/// `grid.stride_mtu` up to `grid.horizon_mtu`. Every trajectory starts from
/// the full `init` state; only `h` differs from `true_params`.
pub fn error_growth(true_params: &L96Params, init: &L96State, h_estimates: &[f64], grid: &GrowthGrid) -> Result<Vec<f64>> {
    if h_estimates.is_empty() {
        return Err(Error::EmptySample);
    }
    grid.validate()?;
    true_params.validate()?;
    init.check(true_params)?;
    let start = init.to_flat();
    let truth = x1_samples(&start, true_params, grid)?;
    let mut sum = alloc::vec![0.0; truth.len()];
    for &h in h_estimates {
        let pred = x1_samples(&start, &true_params.with_h(h), grid).map_err(|e| match e {
            Error::Diverged { step } => Error::EstimateDiverged { h, step },
            other => other,
        })?;
        for ((s, p), t) in sum.iter_mut().zip(&pred).zip(&truth) {
            *s += libm::fabs(p - t);
        }
    }
    let n = h_estimates.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorGrowthSeries {
    pub mtu: Vec<f64>,
    pub gp: Option<Vec<f64>>,
    pub mlp: Option<Vec<f64>>,
    pub lr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRow {
    pub true_h: f64,
    pub mean: f64,
    pub lower95: f64,
    pub upper95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub rows: Vec<UncertaintyRow>,
    /// Fraction of rows whose true value lies inside the closed 95% interval.
    pub coverage: f64,
}

pub fn uncertainty_from(xs: &Matrix, targets: &[f64], gp: &GPModel) -> Result<UncertaintyReport> {
    if xs.rows() != targets.len() {
        return Err(Error::DimensionMismatch { expected: xs.rows(), got: targets.len() });
    }
    if targets.is_empty() {
        return Err(Error::EmptySample);
    }
    let p = gp.predict(xs)?;
    let rows: Vec<UncertaintyRow> = (0..targets.len())
        .map(|i| UncertaintyRow { true_h: targets[i], mean: p.mean[i], lower95: p.lower95[i], upper95: p.upper95[i] })
        .collect();
    let hits = rows.iter().filter(|r| r.lower95 <= r.true_h && r.true_h <= r.upper95).count();
    Ok(UncertaintyReport { coverage: hits as f64 / rows.len() as f64, rows })
}

/// One row per test point with the GP mean and 95% bounds.
pub fn uncertainty_report(gp: &GPModel, dataset: &Dataset) -> Result<UncertaintyReport> {
    uncertainty_from(&dataset.standardized_test(), &dataset.test_targets, gp)
}
