use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::models::{Coupling, Family, Hyperparams, InteractionModel, Model};
use crate::numerics::{AdamState, DenseMatrix};
use crate::scalar::Scalar;
use crate::training::als::{als_sweep_items, als_sweep_users};
use crate::training::gd::{epoch_batches, gd_content_mse, gd_wpe};
use crate::training::objective::{content_mse, objective_value, slot_lengths, Objective, Owned};
use crate::training::TrainSet;

/// Kind of work done in one training step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Alternating least squares sweep on W and H without content.
    Als,
    /// Second stage of the two-stage method: content network fit.
    Content,
    /// One outer iteration of the hybrid method (ALS, then gradient epochs).
    Hybrid,
    /// Joint gradient epoch.
    Gradient,
    /// Gradient epoch with the dot product standing in for the tower.
    Pretrain,
    /// Gradient epoch with the tower attached.
    Finetune,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Als,
        Phase::Content,
        Phase::Hybrid,
        Phase::Gradient,
        Phase::Pretrain,
        Phase::Finetune,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Als => "als",
            Phase::Content => "content",
            Phase::Hybrid => "hybrid",
            Phase::Gradient => "gradient",
            Phase::Pretrain => "pretrain",
            Phase::Finetune => "finetune",
        }
    }

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|p| *p == self).unwrap() as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub objective: f64,
    pub val_ndcg: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub variant: String,
    pub records: Vec<EpochRecord>,
    pub epochs_run: usize,
    /// Step whose model was kept, when validation ran.
    pub best_epoch: Option<usize>,
    pub best_val_ndcg: Option<f64>,
    /// Step after which patience ran out.
    pub early_stop_epoch: Option<usize>,
    pub hyper: Hyperparams,
}

impl TrainReport {
    /// First step of each phase, in order.
    pub fn phase_boundaries(&self) -> Vec<(Phase, usize)> {
        let mut out: Vec<(Phase, usize)> = Vec::new();
        for r in &self.records {
            if out.last().is_none_or(|(p, _)| *p != r.phase) {
                out.push((r.phase, r.epoch));
            }
        }
        out
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Deterministic part of the report: `epoch phase objective val_ndcg`.
    pub fn write_tsv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "epoch\tphase\tobjective\tval_ndcg")?;
        for r in &self.records {
            let ndcg = r.val_ndcg.map_or_else(|| "-".to_string(), |v| format!("{v:.17e}"));
            writeln!(w, "{}\t{}\t{:.17e}\t{ndcg}", r.epoch, r.phase, r.objective)?;
        }
        Ok(())
    }

    /// Wall-clock seconds per step.
    pub fn write_timings(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "epoch\tphase\tseconds")?;
        for r in &self.records {
            writeln!(w, "{}\t{}\t{:.6}", r.epoch, r.phase, r.seconds)?;
        }
        Ok(())
    }
}

/// Validation callback: higher is better.
pub type Validator<'a, T> = dyn Fn(&Model<T>) -> Result<f64> + Sync + 'a;

pub struct TrainOptions<'a, T> {
    pub validate: Option<&'a Validator<'a, T>>,
    /// Stop after this many validations without improvement.
    pub patience: Option<usize>,
    /// Return after this many steps in one call (the state stays resumable).
    pub step_limit: Option<usize>,
    /// Record the full objective after each step.
    pub track_objective: bool,
}

impl<T> Default for TrainOptions<'_, T> {
    fn default() -> Self {
        Self {
            validate: None,
            patience: None,
            step_limit: None,
            track_objective: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Best<T> {
    pub score: f64,
    pub step: usize,
    pub model: Model<T>,
}

/// Everything needed to continue training bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    pub model: Model<T>,
    pub adam: Option<AdamState<T>>,
    /// Phase the optimizer state belongs to.
    pub adam_phase: Option<Phase>,
    pub steps_done: usize,
    pub best: Option<Best<T>>,
    pub stale_evals: usize,
    pub stopped_early: bool,
    pub records: Vec<EpochRecord>,
}

impl<T: Scalar> TrainState<T> {
    pub fn new(model: Model<T>) -> Self {
        Self {
            model,
            adam: None,
            adam_phase: None,
            steps_done: 0,
            best: None,
            stale_evals: 0,
            stopped_early: false,
            records: Vec::new(),
        }
    }

    /// Starts a tower model after its dot-product pretraining, taking the
    /// embeddings and content network of `pretrained`.
    pub fn from_pretrained(mut model: Model<T>, pretrained: &Model<T>) -> Result<Self> {
        if !matches!(model.variant.family, Family::Ncacf | Family::Ncf) {
            return Err(Error::config("only tower models start from a pretrained checkpoint"));
        }
        if pretrained.variant.coupling != model.variant.coupling
            || pretrained.embeddings.users.shape() != model.embeddings.users.shape()
            || pretrained.embeddings.items.as_ref().map(DenseMatrix::shape)
                != model.embeddings.items.as_ref().map(DenseMatrix::shape)
            || pretrained.extractor.is_some() != model.extractor.is_some()
            || pretrained.interaction.is_deep()
        {
            return Err(Error::config(format!(
                "pretrained {} does not fit {}",
                pretrained.variant.name(),
                model.variant.name()
            )));
        }
        if let (Some(a), Some(b)) = (&pretrained.extractor, &model.extractor) {
            if a.net.layers().iter().map(|l| l.weights.shape()).ne(b.net.layers().iter().map(|l| l.weights.shape())) {
                return Err(Error::config("pretrained content network has a different shape"));
            }
        }
        model.embeddings = pretrained.embeddings.clone();
        model.extractor = pretrained.extractor.clone();
        model.interaction = InteractionModel::DotProduct;
        let mut state = Self::new(model);
        state.steps_done = state.model.hyper.pretrain_epochs;
        Ok(state)
    }

    pub fn total_steps(&self) -> usize {
        total_steps(&self.model)
    }

    pub fn is_finished(&self) -> bool {
        self.stopped_early || self.steps_done >= self.total_steps()
    }

    /// Final model (best validated if validation ran) and report.
    pub fn finish(self) -> (Model<T>, TrainReport) {
        let report = TrainReport {
            variant: self.model.variant.name(),
            epochs_run: self.steps_done,
            best_epoch: self.best.as_ref().map(|b| b.step),
            best_val_ndcg: self.best.as_ref().map(|b| b.score),
            early_stop_epoch: self.stopped_early.then_some(self.steps_done),
            hyper: self.model.hyper,
            records: self.records,
        };
        let model = match self.best {
            Some(b) => b.model,
            None => self.model,
        };
        (model, report)
    }
}

pub fn total_steps<T>(model: &Model<T>) -> usize {
    let h = &model.hyper;
    match model.variant.family {
        Family::Wmf | Family::MfHybrid => h.n_iter,
        Family::Dcb => h.n_iter + h.n_iter * h.n_gd,
        Family::MfUni => h.max_epochs,
        Family::Ncacf | Family::Ncf => h.pretrain_epochs + h.max_epochs,
    }
}

pub fn phase_of<T>(model: &Model<T>, step: usize) -> Phase {
    let h = &model.hyper;
    match model.variant.family {
        Family::Wmf => Phase::Als,
        Family::Dcb if step < h.n_iter => Phase::Als,
        Family::Dcb => Phase::Content,
        Family::MfHybrid => Phase::Hybrid,
        Family::MfUni => Phase::Gradient,
        Family::Ncacf | Family::Ncf if step < h.pretrain_epochs => Phase::Pretrain,
        Family::Ncacf | Family::Ncf => Phase::Finetune,
    }
}

fn final_phase<T>(model: &Model<T>) -> Phase {
    phase_of(model, total_steps(model).saturating_sub(1))
}

fn content_free_objective<T>(model: &Model<T>) -> Objective {
    Objective {
        coupling: Coupling::ContentFree,
        lambda_w: model.hyper.lambda_w,
        lambda_h: model.hyper.lambda_h,
    }
}

fn strict_objective<T>(model: &Model<T>) -> Objective {
    Objective {
        coupling: Coupling::Strict,
        lambda_w: model.hyper.lambda_w,
        lambda_h: 0.0,
    }
}

/// Content output for every active item (other rows zero).
fn content_matrix<T: Scalar>(model: &Model<T>, set: &TrainSet<T>) -> Result<DenseMatrix<T>> {
    let ex = model
        .extractor
        .as_ref()
        .ok_or_else(|| Error::Unsupported("model has no content network".into()))?;
    let mut out = DenseMatrix::zeros(set.num_items(), model.k());
    for &i in set.active_items() {
        out.row_mut(i).copy_from_slice(&ex.embed(set.feature_row(i)?)?);
    }
    Ok(out)
}

fn item_matrix<T: Scalar>(model: &Model<T>) -> Result<&DenseMatrix<T>> {
    model
        .embeddings
        .items
        .as_ref()
        .ok_or_else(|| Error::Unsupported("model has no item embeddings".into()))
}

fn ensure_adam<T: Scalar>(state: &mut TrainState<T>, phase: Phase, owned: Owned) -> Result<()> {
    if state.adam_phase != Some(phase) || state.adam.is_none() {
        let slots = slot_lengths(&state.model, owned)?;
        state.adam = Some(AdamState::new(&slots, T::of(state.model.hyper.eta)));
        state.adam_phase = Some(phase);
    }
    Ok(())
}

/// Runs one step and returns the objective to record.
fn run_step<T: Scalar>(state: &mut TrainState<T>, set: &TrainSet<T>, step: usize, track: bool) -> Result<Option<f64>> {
    let phase = phase_of(&state.model, step);
    let hyper = state.model.hyper;
    let seed = state.model.seed;
    let lw = T::of(hyper.lambda_w);
    let lh = T::of(hyper.lambda_h);
    let coupling = state.model.variant.coupling;
    match phase {
        Phase::Als => {
            let h = item_matrix(&state.model)?.clone();
            als_sweep_users(&mut state.model.embeddings.users, &h, set, lw)?;
            let emb = &mut state.model.embeddings;
            als_sweep_items(emb.items.as_mut().expect("checked above"), &emb.users, set, lh, None)?;
        }
        Phase::Content => {
            ensure_adam(state, phase, Owned::CONTENT)?;
            let epoch = step - hyper.n_iter;
            let batches = epoch_batches(set, &hyper, seed, epoch);
            let adam = state.adam.as_mut().expect("created above");
            if coupling == Coupling::Strict {
                let obj = strict_objective(&state.model);
                gd_wpe(&mut state.model, set, &obj, Owned::CONTENT, adam, &batches)?;
            } else {
                let targets = item_matrix(&state.model)?.clone();
                gd_content_mse(&mut state.model, set, &targets, adam, &batches)?;
            }
        }
        Phase::Hybrid => {
            ensure_adam(state, phase, Owned::CONTENT)?;
            let phi = content_matrix(&state.model, set)?;
            if coupling == Coupling::Strict {
                als_sweep_users(&mut state.model.embeddings.users, &phi, set, lw)?;
            } else {
                let h = item_matrix(&state.model)?.clone();
                als_sweep_users(&mut state.model.embeddings.users, &h, set, lw)?;
                let emb = &mut state.model.embeddings;
                als_sweep_items(emb.items.as_mut().expect("relaxed stores H"), &emb.users, set, lh, Some(&phi))?;
            }
            let obj = strict_objective(&state.model);
            for inner in 0..hyper.n_gd {
                let batches = epoch_batches(set, &hyper, seed, step * hyper.n_gd + inner);
                let adam = state.adam.as_mut().expect("created above");
                if coupling == Coupling::Strict {
                    gd_wpe(&mut state.model, set, &obj, Owned::CONTENT, adam, &batches)?;
                } else {
                    let targets = item_matrix(&state.model)?.clone();
                    gd_content_mse(&mut state.model, set, &targets, adam, &batches)?;
                }
            }
        }
        Phase::Gradient | Phase::Pretrain | Phase::Finetune => {
            match phase {
                Phase::Pretrain if state.model.interaction.is_deep() => {
                    state.model.interaction = InteractionModel::DotProduct;
                }
                Phase::Finetune if !state.model.interaction.is_deep() => {
                    state.model.interaction = state.model.fresh_interaction()?;
                }
                _ => {}
            }
            let owned = Owned::joint(&state.model);
            ensure_adam(state, phase, owned)?;
            let obj = Objective::of_model(&state.model);
            let batches = epoch_batches(set, &hyper, seed, step);
            let adam = state.adam.as_mut().expect("created above");
            gd_wpe(&mut state.model, set, &obj, owned, adam, &batches)?;
        }
    }
    if !state.model.is_finite() {
        return Err(Error::NonFinite(format!("parameters diverged at step {step}")));
    }
    if !track {
        return Ok(None);
    }
    let m = &state.model;
    let value = match phase {
        Phase::Als => objective_value(m, set, &content_free_objective(m))?,
        Phase::Content if coupling == Coupling::Strict => objective_value(m, set, &strict_objective(m))?,
        Phase::Content => content_mse(m, set, item_matrix(m)?, set.active_items(), false)?.0,
        _ => objective_value(m, set, &Objective::of_model(m))?,
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("objective diverged at step {step}")));
    }
    Ok(Some(value.as_f64()))
}

/// Continues training until the schedule ends, patience runs out, or the
/// step limit of this call is reached.
pub fn run_training<T: Scalar>(state: &mut TrainState<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<()> {
    state.model.variant.validate()?;
    state.model.hyper.validate()?;
    let total = state.total_steps();
    let last_phase = final_phase(&state.model);
    let every = state.model.hyper.eval_every;
    let mut taken = 0;
    while !state.is_finished() {
        if opts.step_limit.is_some_and(|lim| taken >= lim) {
            break;
        }
        let step = state.steps_done;
        let phase = phase_of(&state.model, step);
        let start = Instant::now();
        let objective = run_step(state, set, step, opts.track_objective)?.unwrap_or(f64::NAN);
        state.steps_done += 1;
        taken += 1;
        let mut val_ndcg = None;
        let due = state.steps_done % every == 0 || state.steps_done == total;
        if let (Some(validate), true, true) = (opts.validate, due, phase == last_phase) {
            let score = validate(&state.model)?;
            val_ndcg = Some(score);
            if state.best.as_ref().is_none_or(|b| score > b.score) {
                state.best = Some(Best {
                    score,
                    step,
                    model: state.model.clone(),
                });
                state.stale_evals = 0;
            } else {
                state.stale_evals += 1;
                if opts.patience.is_some_and(|p| state.stale_evals >= p) {
                    state.stopped_early = true;
                }
            }
        }
        log::info!(
            "{} step {step} ({phase}) objective {objective:.6e}{}",
            state.model.variant.name(),
            val_ndcg.map_or(String::new(), |v| format!(" val-ndcg {v:.4}"))
        );
        state.records.push(EpochRecord {
            epoch: step,
            phase,
            objective,
            val_ndcg,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(())
}

/// Trains `model` to completion.
pub fn train<T: Scalar>(model: Model<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<(Model<T>, TrainReport)> {
    let mut state = TrainState::new(model);
    run_training(&mut state, set, opts)?;
    Ok(state.finish())
}

fn train_family<T: Scalar>(
    family: &[Family],
    model: Model<T>,
    set: &TrainSet<T>,
    opts: &TrainOptions<'_, T>,
) -> Result<(Model<T>, TrainReport)> {
    if !family.contains(&model.variant.family) {
        return Err(Error::config(format!("{} cannot be trained by this procedure", model.variant.name())));
    }
    train(model, set, opts)
}

/// Weighted ALS without content: `n_iter` sweeps of W then H.
pub fn train_wmf<T: Scalar>(model: Model<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<(Model<T>, TrainReport)> {
    train_family(&[Family::Wmf], model, set, opts)
}

/// Two-stage: weighted ALS, then a content fit with the embeddings frozen.
pub fn train_dcb<T: Scalar>(model: Model<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<(Model<T>, TrainReport)> {
    train_family(&[Family::Dcb], model, set, opts)
}

/// Alternating ALS and content gradient epochs.
pub fn train_mf_hybrid<T: Scalar>(model: Model<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<(Model<T>, TrainReport)> {
    if model.hyper.n_iter == 0 || model.hyper.n_gd == 0 {
        return Err(Error::config("hybrid training needs n_iter and n_gd of at least 1"));
    }
    train_family(&[Family::MfHybrid], model, set, opts)
}

/// Joint gradient descent on all embeddings and the content network.
pub fn train_mf_uni<T: Scalar>(model: Model<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<(Model<T>, TrainReport)> {
    train_family(&[Family::MfUni], model, set, opts)
}

/// Dot-product pretraining followed by joint training with the tower.
pub fn train_ncacf<T: Scalar>(model: Model<T>, set: &TrainSet<T>, opts: &TrainOptions<'_, T>) -> Result<(Model<T>, TrainReport)> {
    train_family(&[Family::Ncacf, Family::Ncf], model, set, opts)
}
