use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{FoldView, InteractionTriplets, Signal, SplitMode};
use crate::error::{Error, Result};
use crate::eval::metrics::{mean_std, ndcg_user, rank_candidates};
use crate::models::Model;
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

/// Held-out part of a fold to evaluate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucket {
    Validation,
    Test,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bucket::Validation => "validation",
            Bucket::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTask {
    pub user: usize,
    pub candidates: Vec<usize>,
    /// Relevant held-out items, ascending.
    pub truth: Vec<usize>,
}

/// Ranking problems of one bucket: per user, the candidate pool and the
/// relevant held-out items.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTask {
    pub fold: usize,
    pub setting: SplitMode,
    pub bucket: Bucket,
    pub users: Vec<UserTask>,
    /// Users without relevant held-out items.
    pub excluded: usize,
}

impl EvalTask {
    /// Warm: candidates are all items the user did not interact with in
    /// training. Cold: candidates are the bucket's items.
    pub fn build(
        triplets: &InteractionTriplets,
        view: &FoldView,
        bucket: Bucket,
        setting: SplitMode,
        signal: &Signal,
    ) -> Result<Self> {
        let nu = triplets.num_users();
        let ni = triplets.num_items();
        let held = match bucket {
            Bucket::Validation => &view.validation,
            Bucket::Test => &view.test,
        };
        let mut truth = vec![Vec::new(); nu];
        for &idx in held {
            let t = triplets.entries()[idx];
            if signal.is_relevant(t.count) {
                truth[t.user].push(t.item);
            }
        }
        let cold_pool = match bucket {
            Bucket::Validation => &view.validation_items,
            Bucket::Test => &view.test_items,
        };
        let mut seen = vec![Vec::new(); nu];
        if setting == SplitMode::Warm {
            for &idx in &view.train {
                let t = triplets.entries()[idx];
                seen[t.user].push(t.item);
            }
        }
        let mut users = Vec::new();
        let mut excluded = 0;
        for u in 0..nu {
            let mut tr = std::mem::take(&mut truth[u]);
            if tr.is_empty() {
                excluded += 1;
                continue;
            }
            tr.sort_unstable();
            let candidates = match setting {
                SplitMode::Cold => cold_pool.clone(),
                SplitMode::Warm => {
                    let mut mask = vec![false; ni];
                    for &i in &seen[u] {
                        mask[i] = true;
                    }
                    (0..ni).filter(|&i| !mask[i]).collect()
                }
            };
            users.push(UserTask {
                user: u,
                candidates,
                truth: tr,
            });
        }
        Ok(Self {
            fold: view.test_fold,
            setting,
            bucket,
            users,
            excluded,
        })
    }

    /// Items appearing in any candidate pool, ascending.
    pub fn candidate_items(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.users.iter().flat_map(|u| u.candidates.iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub fold: usize,
    pub setting: SplitMode,
    pub bucket: Bucket,
    pub top_k: usize,
    /// `(user, ndcg)` in user order.
    pub per_user: Vec<(usize, f64)>,
    pub mean: f64,
    pub excluded: usize,
    /// Mean candidate-pool size.
    pub mean_pool: f64,
}

impl EvalResult {
    pub fn write_summary(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "fold\tsetting\tbucket\ttop_k\tusers\texcluded\tmean_pool\tmean_ndcg")?;
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.17e}",
            self.fold,
            self.setting,
            self.bucket,
            self.top_k,
            self.per_user.len(),
            self.excluded,
            self.mean_pool,
            self.mean
        )?;
        Ok(())
    }

    pub fn write_per_user(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "user\tndcg")?;
        for (u, v) in &self.per_user {
            writeln!(w, "{u}\t{v:.17e}")?;
        }
        Ok(())
    }
}

/// Anything that can score candidate items for a user.
pub trait Scorer: Sync {
    fn scores(&self, user: usize, items: &[usize]) -> Result<Vec<f64>>;
}

impl<F> Scorer for F
where
    F: Fn(usize, &[usize]) -> Result<Vec<f64>> + Sync,
{
    fn scores(&self, user: usize, items: &[usize]) -> Result<Vec<f64>> {
        self(user, items)
    }
}

/// Model scorer with item vectors computed once.
pub struct ModelScorer<'a, T> {
    model: &'a Model<T>,
    rows: HashMap<usize, usize>,
    vectors: DenseMatrix<T>,
}

impl<'a, T: Scalar> ModelScorer<'a, T> {
    pub fn new(model: &'a Model<T>, items: &[usize], features: Option<&DenseMatrix<T>>, setting: SplitMode) -> Result<Self> {
        let vectors = model.item_vectors(items, features, setting)?;
        Ok(Self {
            model,
            rows: items.iter().enumerate().map(|(r, &i)| (i, r)).collect(),
            vectors,
        })
    }
}

impl<T: Scalar> Scorer for ModelScorer<'_, T> {
    fn scores(&self, user: usize, items: &[usize]) -> Result<Vec<f64>> {
        items
            .iter()
            .map(|i| {
                let r = self
                    .rows
                    .get(i)
                    .ok_or_else(|| Error::dim(format!("item {i} was not prepared for scoring")))?;
                Ok(self.model.predict(user, self.vectors.row(*r)).as_f64())
            })
            .collect()
    }
}

/// Per-user NDCG@`top_k` and its mean over users with relevant items.
pub fn evaluate_with(scorer: &impl Scorer, task: &EvalTask, top_k: usize) -> Result<EvalResult> {
    let per_user: Vec<(usize, f64)> = task
        .users
        .par_iter()
        .map(|ut| {
            let scores = scorer.scores(ut.user, &ut.candidates)?;
            let ranked = rank_candidates(ut.user, &ut.candidates, &scores, top_k)?;
            Ok((ut.user, ndcg_user(&ranked, &ut.truth).expect("truth is non-empty")))
        })
        .collect::<Result<_>>()?;
    let mean = if per_user.is_empty() {
        f64::NAN
    } else {
        per_user.iter().map(|p| p.1).sum::<f64>() / per_user.len() as f64
    };
    let mean_pool = if task.users.is_empty() {
        0.0
    } else {
        task.users.iter().map(|u| u.candidates.len() as f64).sum::<f64>() / task.users.len() as f64
    };
    Ok(EvalResult {
        fold: task.fold,
        setting: task.setting,
        bucket: task.bucket,
        top_k,
        per_user,
        mean,
        excluded: task.excluded,
        mean_pool,
    })
}

/// Evaluates a model on a task. `features` is indexed by item.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    task: &EvalTask,
    features: Option<&DenseMatrix<T>>,
    top_k: usize,
) -> Result<EvalResult> {
    if task.setting == SplitMode::Cold && !model.variant.can_cold_start() {
        return Err(Error::Unsupported(format!(
            "{} has no content branch and cannot be evaluated on cold-start items",
            model.variant.name()
        )));
    }
    let scorer = ModelScorer::new(model, &task.candidate_items(), features, task.setting)?;
    evaluate_with(&scorer, task, top_k)
}

/// Expected mean NDCG of uniformly random rankings, by simulation.
/// Returns the estimate and its standard error.
pub fn random_baseline(task: &EvalTask, top_k: usize, trials: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut total = 0.0;
        for ut in &task.users {
            let mut pool = ut.candidates.clone();
            pool.shuffle(&mut rng);
            pool.truncate(top_k);
            let ranked = crate::eval::RankedList {
                user: ut.user,
                top_k,
                scores: vec![0.0; pool.len()],
                items: pool,
            };
            total += ndcg_user(&ranked, &ut.truth).unwrap_or(0.0);
        }
        samples.push(total / task.users.len().max(1) as f64);
    }
    let (m, s) = mean_std(&samples);
    (m, s / (trials.max(1) as f64).sqrt())
}
