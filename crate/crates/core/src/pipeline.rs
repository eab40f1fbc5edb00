//! One experiment end to end: fit the requested models on a dataset and
//! produce the metric table rows and the figure series.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    error_growth, estimate_h_pdf, uncertainty_report, ErrorGrowthSeries, FittedModels, GrowthGrid, PdfComparison,
    UncertaintyReport,
};
use crate::baselines::{fit_linear, train_mlp, Regressor, TrainConfig};
use crate::datagen::{regime_window, simulate, Dataset, ParameterPrior};
use crate::dynsys::L96Params;
use crate::exec::Executor;
use crate::gp::{fit_optimized, sample_prediction, HyperSearch, SearchOutcome};
use crate::metrics::{point_metrics, uniform_edges, MetricRow};
use crate::rng::{child_seed, seeded, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gp,
    Mlp,
    Lr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gp, ModelKind::Mlp, ModelKind::Lr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gp => "gp",
            ModelKind::Mlp => "mlp",
            ModelKind::Lr => "lr",
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gp" => Ok(ModelKind::Gp),
            "mlp" => Ok(ModelKind::Mlp),
            "lr" => Ok(ModelKind::Lr),
            other => Err(Error::Config(alloc::format!("unknown model {other:?}; expected gp, mlp or lr"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub search: HyperSearch,
    /// The seed field is replaced by one derived from the run seed.
    pub train: TrainConfig,
    pub bins: usize,
    pub horizon_mtu: f64,
    pub growth_stride_mtu: f64,
    /// Posterior draws per test point pooled into the GP h-density.
    pub pdf_samples_per_point: usize,
    /// Posterior draws per test point used as GP estimates for error growth.
    pub growth_samples_per_point: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            search: HyperSearch::default(),
            train: TrainConfig::default(),
            bins: 20,
            horizon_mtu: 2.0,
            growth_stride_mtu: 0.1,
            pdf_samples_per_point: 100,
            growth_samples_per_point: 4,
        }
    }
}

/// Bin edges spanning the prior support. A degenerate support gets a
/// unit-wide range with the value at the center of a bin.
pub fn edges_for_prior(prior: &ParameterPrior, bins: usize) -> Result<Vec<f64>> {
    if prior.h_high > prior.h_low {
        uniform_edges(prior.h_low, prior.h_high, bins)
    } else {
        let w = 1.0 / bins.max(1) as f64;
        let lo = prior.h_low - ((bins / 2) as f64 + 0.5) * w;
        uniform_edges(lo, lo + 1.0, bins)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: ModelKind,
    pub row: MetricRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment_id: u8,
    pub metrics: Vec<ModelMetrics>,
    pub gp_search: Option<SearchOutcome>,
    pub mlp_loss_curve: Option<Vec<f64>>,
    pub pdf: PdfComparison,
    pub growth: ErrorGrowthSeries,
    pub uncertainty: Option<UncertaintyReport>,
    pub models: FittedModels,
}

impl ExperimentResult {
    pub fn row(&self, model: ModelKind) -> Option<&MetricRow> {
        self.metrics.iter().find(|m| m.model == model).map(|m| &m.row)
    }
}

/// Seeds used by one run, all derived from the run seed and the experiment id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub mlp: u64,
    pub pdf: u64,
    pub growth: u64,
}

impl RunSeeds {
    pub fn derive(seed: u64, experiment_id: u8) -> Self {
        let id = u64::from(experiment_id);
        RunSeeds {
            mlp: child_seed(seed ^ stream::MLP, id),
            pdf: child_seed(seed ^ stream::POSTERIOR, id),
            growth: child_seed(seed ^ stream::ERROR_GROWTH, id),
        }
    }
}

/// Error-growth curve of one model averaged over the held-out simulations.
/// `estimates[r]` holds the h estimates for test row `r`.
fn growth_curve(dataset: &Dataset, estimates: &[Vec<f64>], grid: &GrowthGrid) -> Result<Vec<f64>> {
    let cfg = dataset.config();
    let prior = &dataset.manifest.prior;
    let per = cfg.snapshots_per_sim;
    let (window_start, _) = regime_window(cfg.regime, cfg.dt);
    let mut total = alloc::vec![0.0; grid.n_samples()];
    for (t, sim) in (cfg.n_train_sims()..cfg.n_sims).enumerate() {
        let (sampled, _, traj) = simulate(cfg, prior, sim)?;
        let params = L96Params::new(cfg.k, cfg.j, cfg.forcing, sampled.b, sampled.c, sampled.h)?;
        let init = traj.state(window_start);
        let h_hat: Vec<f64> = estimates[t * per..(t + 1) * per].iter().flatten().copied().collect();
        let curve = error_growth(&params, &init, &h_hat, grid)?;
        for (a, c) in total.iter_mut().zip(curve) {
            *a += c;
        }
    }
    let n = cfg.holdout_sims as f64;
    Ok(total.into_iter().map(|v| v / n).collect())
}

/// Fits the requested models on the standardized train split and evaluates
/// them on the test split.
pub fn run_experiment<E: Executor>(
    dataset: &Dataset,
    models: &[ModelKind],
    settings: &RunSettings,
    seed: u64,
    exec: &E,
) -> Result<ExperimentResult> {
    let cfg = dataset.config();
    if dataset.test_targets.is_empty() {
        return Err(Error::EmptySample.in_stage("dataset"));
    }
    let seeds = RunSeeds::derive(seed, cfg.id);
    let x_train = dataset.standardized_train();
    let x_test = dataset.standardized_test();
    let y_train = &dataset.train_targets;
    let y_test = &dataset.test_targets;

    let wants = |m: ModelKind| models.contains(&m);
    let mut fitted = FittedModels::default();
    let mut gp_search = None;
    let mut mlp_loss_curve = None;
    if wants(ModelKind::Gp) {
        let (gp, outcome) = fit_optimized(&x_train, y_train, &settings.search, exec).map_err(|e| e.in_stage("gp fit"))?;
        fitted.gp = Some(gp);
        gp_search = Some(outcome);
    }
    if wants(ModelKind::Mlp) {
        let cfg = TrainConfig { seed: seeds.mlp, ..settings.train };
        let trained = train_mlp(&x_train, y_train, &cfg).map_err(|e| e.in_stage("mlp training"))?;
        fitted.mlp = Some(trained.model);
        mlp_loss_curve = Some(trained.loss_curve);
    }
    if wants(ModelKind::Lr) {
        fitted.lr = Some(fit_linear(&x_train, y_train).map_err(|e| e.in_stage("linear fit"))?);
    }

    let edges = edges_for_prior(&dataset.manifest.prior, settings.bins).map_err(|e| e.in_stage("pdf"))?;
    let pdf = estimate_h_pdf(&fitted, dataset, &edges, settings.pdf_samples_per_point, seeds.pdf)
        .map_err(|e| e.in_stage("pdf"))?;

    let mut metrics = Vec::new();
    for kind in ModelKind::ALL.into_iter().filter(|m| wants(*m)) {
        let (pred, density) = match kind {
            ModelKind::Gp => (fitted.gp.as_ref().map(|m| m.predict_points(&x_test)), &pdf.gp),
            ModelKind::Mlp => (fitted.mlp.as_ref().map(|m| m.predict_points(&x_test)), &pdf.mlp),
            ModelKind::Lr => (fitted.lr.as_ref().map(|m| m.predict_points(&x_test)), &pdf.lr),
        };
        let pred = pred.expect("requested model was fitted").map_err(|e| e.in_stage("prediction"))?;
        let pm = point_metrics(y_test, &pred).map_err(|e| e.in_stage("metrics"))?;
        let row = MetricRow {
            mse: pm.mse,
            mae: pm.mae,
            r2: pm.r2().map_err(|e| e.in_stage("metrics"))?,
            bhattacharyya: density.as_ref().expect("density computed for every fitted model").bhattacharyya,
            pearson: pm.pearson().map_err(|e| e.in_stage("metrics"))?,
        };
        metrics.push(ModelMetrics { model: kind, row });
    }

    let grid = GrowthGrid {
        horizon_mtu: settings.horizon_mtu,
        stride_mtu: settings.growth_stride_mtu,
        dt: cfg.dt,
        substeps: cfg.substeps,
    };
    let point_estimates = |pred: Vec<f64>| pred.into_iter().map(|p| alloc::vec![p]).collect::<Vec<_>>();
    let gp_growth = match &fitted.gp {
        Some(gp) => {
            let pred = gp.predict(&x_test).map_err(|e| e.in_stage("error growth"))?;
            let draws = sample_prediction(&pred, &mut seeded(seeds.growth), settings.growth_samples_per_point);
            let per_row: Vec<Vec<f64>> = (0..x_test.rows()).map(|r| draws.column(r)).collect();
            Some(growth_curve(dataset, &per_row, &grid).map_err(|e| e.in_stage("error growth"))?)
        }
        None => None,
    };
    let baseline_growth = |m: Option<&dyn Regressor>| -> Result<Option<Vec<f64>>> {
        match m {
            Some(m) => {
                let est = point_estimates(m.predict_points(&x_test)?);
                Ok(Some(growth_curve(dataset, &est, &grid)?))
            }
            None => Ok(None),
        }
    };
    let mlp_growth =
        baseline_growth(fitted.mlp.as_ref().map(|m| m as &dyn Regressor)).map_err(|e| e.in_stage("error growth"))?;
    let lr_growth =
        baseline_growth(fitted.lr.as_ref().map(|m| m as &dyn Regressor)).map_err(|e| e.in_stage("error growth"))?;
    let growth = ErrorGrowthSeries { mtu: grid.mtu(), gp: gp_growth, mlp: mlp_growth, lr: lr_growth };

    let uncertainty = match &fitted.gp {
        Some(gp) => Some(uncertainty_report(gp, dataset).map_err(|e| e.in_stage("uncertainty"))?),
        None => None,
    };

    Ok(ExperimentResult {
        experiment_id: cfg.id,
        metrics,
        gp_search,
        mlp_loss_curve,
        pdf,
        growth,
        uncertainty,
        models: fitted,
    })
}

/// Parses a comma-separated model list such as `gp,lr`.
pub fn parse_models(list: &str) -> Result<Vec<ModelKind>> {
    let mut out: Vec<ModelKind> = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: ModelKind = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(String::from("model list is empty")));
    }
    out.sort();
    Ok(out)
}
