use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ncacf_core::data::SplitMode;
use ncacf_core::eval::{evaluate, FoldData};
use ncacf_core::models::{load_model, save_model, Model};
use ncacf_core::training::{load_state, run_training, save_state, TrainOptions, TrainState};

use crate::config::ExperimentConfig;
use crate::dataset::PreparedDataset;
use crate::error::{CliError, CliResult};

pub const STATE: &str = "state.bin";
pub const MODEL: &str = "model.ckpt";
pub const REPORT: &str = "report.tsv";
pub const TIMINGS: &str = "timings.tsv";
pub const RUN_CONFIG: &str = "config.toml";

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    /// Continue from `state.bin` when present.
    pub resume: bool,
    /// Pretrained dot-product model; `{fold}` is replaced by the fold index.
    pub init: Option<String>,
    /// Stop after this many steps per fold, leaving a resumable state.
    pub stop_after: Option<usize>,
}

pub fn fold_dir(out: &Path, fold: usize) -> PathBuf {
    out.join(format!("fold{fold}"))
}

pub fn write_run_config(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(RUN_CONFIG), cfg.absolutized().to_toml()?)?;
    Ok(())
}

/// Trains every configured fold; returns the fold directories whose
/// training finished.
pub fn train(cfg: &ExperimentConfig, args: &TrainArgs) -> CliResult<Vec<PathBuf>> {
    let ds = PreparedDataset::load(&cfg.dataset_dir())?;
    let plan = ds.plan(cfg.split.mode)?;
    let spec = cfg.run_spec()?;
    if cfg.split.mode == SplitMode::Cold && !spec.variant.can_cold_start() {
        return Err(CliError::Config(format!(
            "{} has no content branch and cannot be trained for cold-start evaluation",
            spec.variant.name()
        )));
    }
    let out = cfg.output_dir();
    write_run_config(cfg, &out)?;
    let mut finished = Vec::new();
    for fold in cfg.folds() {
        let dir = fold_dir(&out, fold);
        std::fs::create_dir_all(&dir)?;
        let data = FoldData::<f64>::prepare(&ds.triplets, ds.features.as_ref(), &plan, fold, &spec)?;
        let state_path = dir.join(STATE);
        let mut state = if args.resume && state_path.exists() {
            let s: TrainState<f64> = load_state(&state_path)?;
            if s.model.variant != spec.variant || s.model.hyper != spec.hyper || s.model.seed != spec.seed {
                return Err(CliError::Config(format!(
                    "{} was written by a different configuration",
                    state_path.display()
                )));
            }
            log::info!("fold {fold}: resuming at step {}", s.steps_done);
            s
        } else if let Some(init) = &args.init {
            let path = PathBuf::from(init.replace("{fold}", &fold.to_string()));
            let pretrained: Model<f64> = load_model(&path)?;
            TrainState::from_pretrained(data.init_model(&spec)?, &pretrained)?
        } else {
            TrainState::new(data.init_model(&spec)?)
        };

        let feats = data.set.features();
        let validate = |m: &Model<f64>| -> ncacf_core::Result<f64> {
            let task = data.validation.as_ref().expect("checked before use");
            Ok(evaluate(m, task, feats, spec.top_k)?.mean)
        };
        let use_validation = spec.early_stopping && data.validation.is_some();
        let mut budget = args.stop_after.unwrap_or(usize::MAX);
        while !state.is_finished() && budget > 0 {
            let chunk = spec.hyper.eval_every.max(1).min(budget);
            let opts = TrainOptions {
                validate: use_validation.then_some(&validate as _),
                patience: spec.patience,
                step_limit: Some(chunk),
                ..Default::default()
            };
            let before = state.steps_done;
            run_training(&mut state, &data.set, &opts)?;
            save_state(&state_path, &state)?;
            budget -= state.steps_done - before;
            if state.steps_done == before {
                break;
            }
        }
        if !state.is_finished() {
            log::info!("fold {fold}: stopped at step {} of {}", state.steps_done, state.total_steps());
            continue;
        }
        let (model, report) = state.finish();
        save_model(&dir.join(MODEL), &model)?;
        let mut w = BufWriter::new(File::create(dir.join(REPORT))?);
        report.write_tsv(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(TIMINGS))?);
        report.write_timings(&mut w)?;
        w.flush()?;
        log::info!("fold {fold}: {} steps, checkpoint in {}", report.epochs_run, dir.display());
        finished.push(dir);
    }
    Ok(finished)
}
