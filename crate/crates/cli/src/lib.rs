//! Experiment driver: configuration, dataset layout and the commands behind
//! the `ncacf` binary.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Profile};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ncacf", version, about = "Content-aware collaborative filtering experiments")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Default-value profile: desk or paper-faithful.
    #[arg(long, global = true)]
    pub profile: Option<Profile>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter raw triplets, attach features and write split manifests.
    Prepare,
    /// Generate a planted synthetic dataset and prepare it.
    Synth,
    /// Train the configured variant on each configured fold.
    Train {
        /// Continue from the saved training state.
        #[arg(long)]
        resume: bool,
        /// Pretrained dot-product checkpoint; `{fold}` expands to the fold index.
        #[arg(long)]
        init: Option<String>,
        /// Stop after this many steps per fold.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Evaluate fold checkpoints on their test buckets.
    Evaluate {
        /// Checkpoint to evaluate instead of the run's own; `{fold}` expands.
        #[arg(long)]
        checkpoint: Option<String>,
    },
    /// Grid search over the regularization weights.
    Sweep,
    /// Compare evaluated runs.
    Report {
        /// Run directories holding a summary.
        runs: Vec<PathBuf>,
        /// Destination directory (defaults to the configured output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, cli.profile)?,
        None => ExperimentConfig::parse("", cli.profile, &std::env::current_dir()?)?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

pub fn run(cli: &Cli, cfg: &ExperimentConfig) -> CliResult<()> {
    match &cli.command {
        Command::Prepare => {
            commands::prepare::prepare(cfg)?;
        }
        Command::Synth => {
            commands::synth::synth(cfg)?;
        }
        Command::Train {
            resume,
            init,
            stop_after,
        } => {
            let args = commands::train::TrainArgs {
                resume: *resume,
                init: init.clone(),
                stop_after: *stop_after,
            };
            commands::train::train(cfg, &args)?;
        }
        Command::Evaluate { checkpoint } => {
            let s = commands::evaluate::evaluate(cfg, checkpoint.as_deref())?;
            println!("{}\tmean {:.6}\tstd {:.6}", s.variant, s.mean, s.std);
        }
        Command::Sweep => {
            let (grid, _, path) = commands::sweep::sweep(cfg)?;
            println!(
                "best lambda_w {} lambda_h {} (validation NDCG {:.6}); config in {}",
                grid.best.lambda_w,
                grid.best.lambda_h,
                grid.best.score,
                path.display()
            );
        }
        Command::Report { runs, out } => {
            let out = out.clone().unwrap_or_else(|| cfg.output_dir());
            let rows = commands::report::report(runs, &out)?;
            for r in rows {
                println!("{}", r.variant);
            }
        }
    }
    Ok(())
}
