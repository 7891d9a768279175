use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ncacf_core::eval::{evaluate as evaluate_model, mean_std, random_baseline, Bucket, EvalResult, EvalTask};
use ncacf_core::models::{load_model, Model};

use crate::commands::train::{fold_dir, MODEL};
use crate::config::ExperimentConfig;
use crate::dataset::PreparedDataset;
use crate::error::{CliError, CliResult};

pub const SUMMARY: &str = "summary.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub variant: String,
    pub folds: Vec<EvalResult>,
    pub mean: f64,
    pub std: f64,
    /// Random-ranking baseline per fold.
    pub random: Vec<f64>,
}

/// Evaluates the checkpoint of every configured fold on its test bucket.
/// `checkpoint` overrides the fold checkpoints; `{fold}` is substituted.
pub fn evaluate(cfg: &ExperimentConfig, checkpoint: Option<&str>) -> CliResult<EvalSummary> {
    let ds = PreparedDataset::load(&cfg.dataset_dir())?;
    let plan = ds.plan(cfg.split.mode)?;
    let variant = cfg.variant()?;
    let signal = cfg.hyperparams().signal;
    let out = cfg.output_dir();
    let mut folds = Vec::new();
    let mut random = Vec::new();
    for fold in cfg.folds() {
        let dir = fold_dir(&out, fold);
        let path = checkpoint.map_or_else(|| dir.join(MODEL), |c| PathBuf::from(c.replace("{fold}", &fold.to_string())));
        let model: Model<f64> = load_model(&path)?;
        if model.variant != variant {
            return Err(CliError::Config(format!(
                "checkpoint {} holds {} but the configuration asks for {}",
                path.display(),
                model.variant.name(),
                variant.name()
            )));
        }
        let features = if variant.has_content() {
            let table = ds.features.as_ref().ok_or_else(|| {
                CliError::Config(format!("evaluating {} needs a features file in the dataset", variant.name()))
            })?;
            let stats = model
                .feature_stats
                .as_ref()
                .ok_or_else(|| CliError::Config(format!("checkpoint {} has no feature statistics", path.display())))?;
            Some(table.apply_standardization(&stats.means, &stats.stds)?)
        } else {
            None
        };
        let view = plan.view(&ds.triplets, fold)?;
        let task = EvalTask::build(&ds.triplets, &view, Bucket::Test, plan.mode, &signal)?;
        let result = evaluate_model(&model, &task, features.as_ref().map(|f| f.matrix()), cfg.eval.top_k)?;
        let (rb, _) = random_baseline(&task, cfg.eval.top_k, cfg.eval.random_trials, cfg.seed);
        std::fs::create_dir_all(&dir)?;
        write_with(&dir.join("eval_test.tsv"), |w| result.write_summary(w))?;
        write_with(&dir.join("eval_test_per_user.tsv"), |w| result.write_per_user(w))?;
        log::info!("fold {fold}: {} NDCG@{} = {:.4} (random {:.4})", plan.mode, cfg.eval.top_k, result.mean, rb);
        folds.push(result);
        random.push(rb);
    }
    let means: Vec<f64> = folds.iter().map(|r| r.mean).collect();
    let (mean, std) = mean_std(&means);
    let summary = EvalSummary {
        variant: variant.name(),
        folds,
        mean,
        std,
        random,
    };
    write_summary(&out.join(SUMMARY), &summary, cfg)?;
    Ok(summary)
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> ncacf_core::Result<()>) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, s: &EvalSummary, cfg: &ExperimentConfig) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let folds: Vec<String> = s.folds.iter().map(|r| r.fold.to_string()).collect();
    let random = s.random.iter().sum::<f64>() / s.random.len().max(1) as f64;
    writeln!(w, "variant\tsetting\ttop_k\tfolds\tmean\tstd\trandom")?;
    writeln!(
        w,
        "{}\t{}\t{}\t{}\t{:?}\t{:?}\t{:?}",
        s.variant,
        cfg.split.mode,
        cfg.eval.top_k,
        folds.join(","),
        s.mean,
        s.std,
        random
    )?;
    w.flush()?;
    Ok(())
}
