use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use ncacf_core::eval::{grid_search, train_and_evaluate, FoldData, GridResult, RunSpec};
use ncacf_core::models::Hyperparams;
use ncacf_core::training::TrainState;

use crate::config::ExperimentConfig;
use crate::dataset::PreparedDataset;
use crate::error::{CliError, CliResult};

pub const TABLE: &str = "sweep.tsv";
pub const BEST: &str = "best_config.toml";

/// Grid search over `(lambda_w, lambda_h)` scored by validation NDCG on the
/// tuning fold. Writes the table and the winning configuration.
pub fn sweep(cfg: &ExperimentConfig) -> CliResult<(GridResult, ExperimentConfig, PathBuf)> {
    let ds = PreparedDataset::load(&cfg.dataset_dir())?;
    let plan = ds.plan(cfg.split.mode)?;
    let spec = cfg.run_spec()?;
    let data = FoldData::<f64>::prepare(&ds.triplets, ds.features.as_ref(), &plan, cfg.sweep.fold, &spec)?;
    if data.validation.is_none() {
        return Err(CliError::Config("sweeping needs validation items (split.val_fraction > 0)".into()));
    }
    let grid = grid_search(&cfg.sweep.lambda_w, &cfg.sweep.lambda_h, |lw, lh| {
        let s = RunSpec {
            hyper: Hyperparams {
                lambda_w: lw,
                lambda_h: lh,
                ..spec.hyper
            },
            ..spec.clone()
        };
        let outcome = train_and_evaluate(&data, &s, TrainState::new(data.init_model(&s)?))?;
        let score = outcome.validation.expect("validation bucket exists").mean;
        log::info!("lambda_w {lw} lambda_h {lh}: validation NDCG {score:.4}");
        Ok(score)
    })?;
    let out = cfg.output_dir();
    std::fs::create_dir_all(&out)?;
    let mut w = BufWriter::new(File::create(out.join(TABLE))?);
    writeln!(w, "lambda_w\tlambda_h\tval_ndcg")?;
    for r in &grid.rows {
        writeln!(w, "{:?}\t{:?}\t{:?}", r.lambda_w, r.lambda_h, r.score)?;
    }
    w.flush()?;
    let mut best = cfg.absolutized();
    best.hyper.lambda_w = grid.best.lambda_w;
    best.hyper.lambda_h = grid.best.lambda_h;
    let path = out.join(BEST);
    std::fs::write(&path, best.to_toml()?)?;
    Ok((grid, best, path))
}
