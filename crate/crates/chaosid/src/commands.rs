use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chaosid_core::datagen::{generate_dataset_with, Dataset, ExperimentConfig};
use chaosid_core::dynsys::{integrate_substepped, random_initial_state, L96Params, L96State};
use chaosid_core::pipeline::{run_experiment, ExperimentResult, ModelKind, RunSeeds};
use chaosid_core::rng::seeded;
use rayon::prelude::*;

use crate::cache;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::Rayon;
use crate::io::{save_dataset, write_json};
use crate::manifest::{RunManifest, SuiteManifest, TOOL_VERSION};
use crate::report::{self, SummaryRow};

pub const METRICS_FILE: &str = "metrics.csv";
pub const PDF_FILE: &str = "pdf.csv";
pub const GROWTH_FILE: &str = "error_growth.csv";
pub const UNCERTAINTY_FILE: &str = "uncertainty.csv";
pub const LOSS_FILE: &str = "mlp_loss.csv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUITE_MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// Shared state of every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub config: RunConfig,
    pub use_cache: bool,
}

impl Context {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Context { out: out.into(), config: RunConfig::default(), use_cache: true }
    }

    pub fn experiment_dir(&self, id: u8) -> PathBuf {
        self.out.join(format!("exp{id}"))
    }
}

pub fn check_id(id: u8) -> Result<()> {
    if (1..=8).contains(&id) {
        Ok(())
    } else {
        Err(Error::Usage(format!("experiment id must be in 1..=8, got {id}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// `X ≡ F`, `Y ≡ 0`; a fixed point when `h = 0`.
    Rest,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOptions {
    pub k: usize,
    pub j: usize,
    pub forcing: f64,
    pub b: f64,
    pub c: f64,
    pub h: f64,
    pub dt: f64,
    pub substeps: usize,
    pub steps: usize,
    pub discard: usize,
    pub seed: u64,
    pub start: Start,
}

/// Writes `trajectory.csv` with one row per retained step.
pub fn cmd_simulate(out: &Path, opts: &SimulateOptions) -> Result<PathBuf> {
    let params = L96Params::new(opts.k, opts.j, opts.forcing, opts.b, opts.c, opts.h)?;
    let init = match opts.start {
        Start::Rest => L96State { x: vec![opts.forcing; opts.k], y: vec![0.0; opts.k * opts.j] },
        Start::Random => random_initial_state(&params, &mut seeded(opts.seed)),
    };
    let traj = integrate_substepped(&init, &params, opts.dt, opts.substeps, opts.steps, opts.discard)
        .map_err(|e| e.in_stage("simulation"))?;
    fs::create_dir_all(out).map_err(Error::io(out))?;
    let path = out.join(TRAJECTORY_FILE);
    report::write_trajectory(&path, &traj)?;
    Ok(path)
}

/// Generates a dataset into `<out>/exp<id>/dataset/`.
pub fn cmd_gen_data(ctx: &Context, id: u8, seed: u64) -> Result<(PathBuf, Dataset)> {
    check_id(id)?;
    let cfg = ctx.config.experiment(id, seed)?;
    let ds = generate_dataset_with(&cfg, &ctx.config.prior, &Rayon).map_err(|e| e.in_stage("data generation"))?;
    let dir = ctx.experiment_dir(id).join("dataset");
    save_dataset(&ds, &dir)?;
    Ok((dir, ds))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub result: ExperimentResult,
}

/// Fits `models` on experiment `id` and writes the metric and figure CSVs
/// plus a run manifest into `<out>/exp<id>/`.
pub fn cmd_run(ctx: &Context, id: u8, models: &[ModelKind], seed: u64) -> Result<RunOutcome> {
    check_id(id)?;
    if models.is_empty() {
        return Err(Error::Usage("model list is empty".into()));
    }
    let started = Instant::now();
    let cfg = ctx.config.experiment(id, seed)?;
    let prior = &ctx.config.prior;
    fs::create_dir_all(&ctx.out).map_err(Error::io(&ctx.out))?;
    let (dataset, from_cache, key) = if ctx.use_cache {
        let (ds, source, key) = cache::dataset(&ctx.out, &cfg, prior)?;
        (ds, matches!(source, cache::Source::Cached(_)), Some(key))
    } else {
        let ds = generate_dataset_with(&cfg, prior, &Rayon).map_err(|e| e.in_stage("data generation"))?;
        (ds, false, None)
    };
    let result = run_experiment(&dataset, models, &ctx.config.settings, seed, &Rayon)?;

    let dir = ctx.experiment_dir(id);
    fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    let mut outputs = vec![METRICS_FILE, PDF_FILE, GROWTH_FILE, UNCERTAINTY_FILE];
    report::write_metrics(&dir.join(METRICS_FILE), &result)?;
    report::write_pdf(&dir.join(PDF_FILE), &result.pdf)?;
    report::write_growth(&dir.join(GROWTH_FILE), &result.growth)?;
    report::write_uncertainty(&dir.join(UNCERTAINTY_FILE), result.uncertainty.as_ref())?;
    if let Some(curve) = &result.mlp_loss_curve {
        report::write_loss_curve(&dir.join(LOSS_FILE), curve)?;
        outputs.push(LOSS_FILE);
    }
    outputs.push(RUN_MANIFEST_FILE);

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        experiment_id: id,
        seed,
        seeds: RunSeeds::derive(seed, id),
        experiment: cfg,
        prior: *prior,
        settings: ctx.config.settings,
        models: models.to_vec(),
        gp_hyperparameters: result.gp_search.map(|s| s.hyper),
        gp_log_marginal_likelihood: result.gp_search.map(|s| s.log_marginal_likelihood),
        gp_coverage95: result.uncertainty.as_ref().map(|u| u.coverage),
        dataset_cache_key: key,
        dataset_from_cache: from_cache,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&dir.join(RUN_MANIFEST_FILE), &manifest)?;
    Ok(RunOutcome { dir, manifest, result })
}

/// Runs all eight experiments with every model and writes `summary.csv`
/// with one row per (experiment, model). Failed experiments keep their rows
/// with empty metrics and the error in `status`; the call then returns
/// [`Error::ExperimentsFailed`] after writing the summary.
pub fn cmd_reproduce_all(ctx: &Context, seed: u64) -> Result<Vec<SummaryRow>> {
    let started = Instant::now();
    fs::create_dir_all(&ctx.out).map_err(Error::io(&ctx.out))?;
    let runs: Vec<(u8, Result<RunOutcome>)> =
        (1..=8u8).into_par_iter().map(|id| (id, cmd_run(ctx, id, &ModelKind::ALL, seed))).collect();

    let mut rows = Vec::with_capacity(24);
    let mut failed = Vec::new();
    let mut outputs = vec![SUMMARY_FILE.to_string()];
    for (id, run) in &runs {
        let cfg = ExperimentConfig::for_id(*id, seed)?;
        let status = match run {
            Ok(o) => {
                let rel = format!("exp{id}");
                outputs.extend(o.manifest.outputs.iter().map(|f| format!("{rel}/{f}")));
                "ok".to_string()
            }
            Err(e) => {
                failed.push((*id, e.to_string()));
                format!("failed: {e}")
            }
        };
        for model in ModelKind::ALL {
            rows.push(SummaryRow {
                experiment: *id,
                model,
                k: cfg.k,
                j: cfg.j,
                forcing: cfg.forcing,
                regime: cfg.regime.to_string(),
                metrics: run.as_ref().ok().and_then(|o| o.result.row(model).copied()),
                status: status.clone(),
            });
        }
    }
    report::write_summary(&ctx.out.join(SUMMARY_FILE), &rows)?;
    outputs.push(SUITE_MANIFEST_FILE.to_string());
    let manifest = SuiteManifest {
        tool_version: TOOL_VERSION.to_string(),
        seed,
        failed: failed.iter().map(|(id, _)| *id).collect(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    write_json(&ctx.out.join(SUITE_MANIFEST_FILE), &manifest)?;
    if failed.is_empty() {
        Ok(rows)
    } else {
        Err(Error::ExperimentsFailed { failed: failed.into_iter().map(|(id, e)| format!("experiment {id}: {e}")).collect() })
    }
}
