//! Ranking, NDCG, evaluation over split buckets, cross-validation and
//! hyperparameter search.

mod evaluate;
mod experiment;
mod metrics;
mod search;

pub use evaluate::{evaluate, evaluate_with, random_baseline, Bucket, EvalResult, EvalTask, ModelScorer, Scorer, UserTask};
pub use experiment::{run_fold, train_and_evaluate, FoldData, FoldOutcome, RunSpec};
pub use metrics::{dcg, mean_std, ndcg_user, rank_candidates, rank_items, RankedList};
pub use search::{cross_validate, grid_search, CvSummary, GridResult, GridRow};
