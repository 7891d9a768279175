use crate::data::{FeatureTable, InteractionTriplets, SplitMode, SplitPlan};
use crate::error::{Error, Result};
use crate::eval::{evaluate, Bucket, EvalResult, EvalTask};
use crate::models::{init_model, Hyperparams, Model, ModelDims, ModelVariant};
use crate::scalar::Scalar;
use crate::training::{run_training, TrainOptions, TrainReport, TrainSet, TrainState};

/// Everything that defines one training run apart from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub variant: ModelVariant,
    pub k: usize,
    pub hidden_width: usize,
    pub content_layers: usize,
    pub hyper: Hyperparams,
    pub seed: u64,
    pub top_k: usize,
    /// Validate every `eval_every` steps and keep the best model.
    pub early_stopping: bool,
    pub patience: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FoldOutcome<T> {
    pub model: Model<T>,
    pub report: TrainReport,
    pub validation: Option<EvalResult>,
    pub test: EvalResult,
}

/// Training set, tasks and features of one fold.
pub struct FoldData<T> {
    pub set: TrainSet<T>,
    pub stats: Option<crate::models::FeatureStats>,
    pub validation: Option<EvalTask>,
    pub test: EvalTask,
}

impl<T: Scalar> FoldData<T> {
    pub fn prepare(
        triplets: &InteractionTriplets,
        features: Option<&FeatureTable>,
        plan: &SplitPlan,
        fold: usize,
        spec: &RunSpec,
    ) -> Result<Self> {
        let view = plan.view(triplets, fold)?;
        let features = if spec.variant.has_content() {
            Some(features.ok_or_else(|| Error::MissingFeatures(format!("{} needs item features", spec.variant.name())))?)
        } else {
            None
        };
        let signal = spec.hyper.signal;
        let (set, stats) = TrainSet::from_view(triplets, &view, &signal, features)?;
        let validation = if view.validation.is_empty() {
            None
        } else {
            Some(EvalTask::build(triplets, &view, Bucket::Validation, plan.mode, &signal)?)
        };
        let test = EvalTask::build(triplets, &view, Bucket::Test, plan.mode, &signal)?;
        Ok(Self {
            set,
            stats,
            validation,
            test,
        })
    }

    pub fn init_model(&self, spec: &RunSpec) -> Result<Model<T>> {
        let dims = ModelDims {
            users: self.set.num_users(),
            items: self.set.num_items(),
            k: spec.k,
            features: self.set.features().map_or(0, |f| f.cols()),
            hidden_width: spec.hidden_width,
            content_layers: spec.content_layers,
        };
        let mut model = init_model(&spec.variant, dims, spec.seed, spec.hyper)?;
        model.feature_stats = self.stats.clone();
        Ok(model)
    }
}

/// Trains from `state` on a prepared fold and evaluates on its buckets.
pub fn train_and_evaluate<T: Scalar>(
    data: &FoldData<T>,
    spec: &RunSpec,
    mut state: TrainState<T>,
) -> Result<FoldOutcome<T>> {
    if data.test.setting == SplitMode::Cold && !spec.variant.can_cold_start() {
        return Err(Error::Unsupported(format!(
            "{} cannot be evaluated on cold-start items",
            spec.variant.name()
        )));
    }
    let feats = data.set.features();
    let validate = |m: &Model<T>| -> Result<f64> {
        let task = data.validation.as_ref().expect("checked before use");
        Ok(evaluate(m, task, feats, spec.top_k)?.mean)
    };
    let opts = TrainOptions {
        validate: (spec.early_stopping && data.validation.is_some()).then_some(&validate as _),
        patience: spec.patience,
        ..Default::default()
    };
    run_training(&mut state, &data.set, &opts)?;
    let (model, report) = state.finish();
    let validation = data
        .validation
        .as_ref()
        .map(|t| evaluate(&model, t, feats, spec.top_k))
        .transpose()?;
    let test = evaluate(&model, &data.test, feats, spec.top_k)?;
    Ok(FoldOutcome {
        model,
        report,
        validation,
        test,
    })
}

/// Prepares one fold, trains a fresh model and evaluates it.
pub fn run_fold<T: Scalar>(
    triplets: &InteractionTriplets,
    features: Option<&FeatureTable>,
    plan: &SplitPlan,
    fold: usize,
    spec: &RunSpec,
) -> Result<FoldOutcome<T>> {
    let data = FoldData::prepare(triplets, features, plan, fold, spec)?;
    let model = data.init_model(spec)?;
    train_and_evaluate(&data, spec, TrainState::new(model))
}
