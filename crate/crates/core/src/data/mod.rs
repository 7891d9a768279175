//! Interaction and content-feature data: ingestion, filtering, binarization,
//! confidence weighting, cross-validation splits and a planted-model generator.

mod features;
mod filter;
mod signal;
mod sparse;
mod split;
mod synthetic;
mod triplets;

pub use features::{load_features, standardize_features, FeatureTable};
pub use filter::filter_activity;
pub use signal::{binarize, confidence, Signal};
pub use sparse::SparsePlaycounts;
pub use split::{split_cold, split_warm, FoldView, SplitMode, SplitPlan};
pub use synthetic::{generate_synthetic, PlantedModel, SyntheticConfig, SyntheticDataset};
pub use triplets::{load_triplets, parse_triplets, InteractionTriplets, Triplet};
