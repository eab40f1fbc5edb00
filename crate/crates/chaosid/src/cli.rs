use std::path::PathBuf;

use chaosid_core::pipeline::{parse_models, ModelKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, Context, SimulateOptions, Start};
use crate::config::{FlagOverrides, RunConfig};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "chaosid", version, about = "Estimate the Lorenz-96 coupling parameter with Gaussian processes")]
pub struct Cli {
    /// Output root.
    #[arg(long, global = true, env = "CHAOSID_OUT", default_value = "out")]
    pub out: PathBuf,
    /// JSON configuration overriding library defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write time, X1..XK.
    Simulate(SimulateArgs),
    /// Generate the dataset of one experiment.
    GenData {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
        id: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit and evaluate models on one experiment.
    Run {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
        id: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated subset of gp, mlp, lr.
        #[arg(long, default_value = "gp,mlp,lr")]
        models: String,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run all eight experiments and write summary.csv.
    ReproduceAll {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Histogram bins for the h densities.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Error-growth horizon in model time units.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Always regenerate the dataset.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StartArg {
    Rest,
    Random,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub j: usize,
    #[arg(long, default_value_t = 10.0)]
    pub forcing: f64,
    #[arg(long, default_value_t = 10.0)]
    pub b: f64,
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    /// RK4 steps per output step.
    #[arg(long, default_value_t = chaosid_core::datagen::DEFAULT_SUBSTEPS)]
    pub substeps: usize,
    /// Retained output steps (rows of the CSV).
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Output steps integrated before the first retained one.
    #[arg(long, default_value_t = 0)]
    pub discard: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = StartArg::Random)]
    pub start: StartArg,
}

fn context(cli: &Cli, flags: Option<&RunFlags>) -> Result<Context> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| Error::Usage(format!("config: {e}")))?,
        None => RunConfig::default(),
    };
    let overrides = flags.map_or(FlagOverrides::default(), |f| FlagOverrides { bins: f.bins, horizon_mtu: f.horizon });
    Ok(Context {
        out: cli.out.clone(),
        config: config.with_flags(overrides),
        use_cache: !flags.is_some_and(|f| f.no_cache),
    })
}

fn models(list: &str) -> Result<Vec<ModelKind>> {
    parse_models(list).map_err(|e| Error::Usage(e.to_string()))
}

/// Executes a parsed command line, returning a one-line report.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Simulate(a) => {
            let opts = SimulateOptions {
                k: a.k,
                j: a.j,
                forcing: a.forcing,
                b: a.b,
                c: a.c,
                h: a.h,
                dt: a.dt,
                substeps: a.substeps,
                steps: a.steps,
                discard: a.discard,
                seed: a.seed,
                start: match a.start {
                    StartArg::Rest => Start::Rest,
                    StartArg::Random => Start::Random,
                },
            };
            let path = commands::cmd_simulate(&cli.out, &opts)?;
            Ok(format!("wrote {}", path.display()))
        }
        Command::GenData { id, seed } => {
            let ctx = context(cli, None)?;
            let (dir, ds) = commands::cmd_gen_data(&ctx, *id, *seed)?;
            Ok(format!(
                "wrote {} ({} train rows, {} test rows)",
                dir.display(),
                ds.train_targets.len(),
                ds.test_targets.len()
            ))
        }
        Command::Run { id, seed, models: list, run } => {
            let ctx = context(cli, Some(run))?;
            let outcome = commands::cmd_run(&ctx, *id, &models(list)?, *seed)?;
            let rows: Vec<String> = outcome
                .result
                .metrics
                .iter()
                .map(|m| format!("{} r2={:.3} bhattacharyya={:.3}", m.model, m.row.r2, m.row.bhattacharyya))
                .collect();
            Ok(format!("wrote {}: {}", outcome.dir.display(), rows.join(", ")))
        }
        Command::ReproduceAll { seed, run } => {
            let ctx = context(cli, Some(run))?;
            let rows = commands::cmd_reproduce_all(&ctx, *seed)?;
            Ok(format!("wrote {} ({} rows)", ctx.out.join(commands::SUMMARY_FILE).display(), rows.len()))
        }
    }
}
