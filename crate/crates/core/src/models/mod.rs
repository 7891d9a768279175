//! Parameter containers and prediction paths for every model family.

mod checkpoint;
mod embeddings;
mod extractor;
mod interaction;
mod model;
mod variant;

pub use checkpoint::{load_model, read_model, save_model, write_model};
pub use embeddings::{Embeddings, EMBEDDING_INIT_STD};
pub use extractor::ContentExtractor;
pub use interaction::{combine, tower_widths, InteractionModel, ScoreGrad};
pub use model::{init_model, init_rng, FeatureStats, InitStream, Model, ModelDims};
pub use variant::{Combination, Coupling, Family, Hyperparams, InteractionConfig, InteractionKind, ModelVariant};
