use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::SplitMode;
use crate::error::{Error, Result};
use crate::models::embeddings::{normal_matrix, EMBEDDING_INIT_STD};
use crate::models::{ContentExtractor, Embeddings, Hyperparams, InteractionModel, ModelVariant};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

/// Sizes a model is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub users: usize,
    pub items: usize,
    /// Embedding size.
    pub k: usize,
    /// Feature width (ignored without a content branch).
    pub features: usize,
    pub hidden_width: usize,
    /// Affine layers in the content network.
    pub content_layers: usize,
}

impl ModelDims {
    pub fn new(users: usize, items: usize, k: usize, features: usize) -> Self {
        Self {
            users,
            items,
            k,
            features,
            hidden_width: 64,
            content_layers: 3,
        }
    }
}

/// Feature standardization fitted on training items, applied at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Per-component random streams derived from the model seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStream {
    Users = 1,
    Items = 2,
    Content = 3,
    Tower = 4,
}

pub fn init_rng(seed: u64, stream: InitStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub variant: ModelVariant,
    pub dims: ModelDims,
    pub seed: u64,
    pub hyper: Hyperparams,
    pub embeddings: Embeddings<T>,
    pub extractor: Option<ContentExtractor<T>>,
    /// Active interaction. NCACF pretraining runs with the dot product here.
    pub interaction: InteractionModel<T>,
    pub feature_stats: Option<FeatureStats>,
}

/// Builds a freshly initialized model: embeddings centered normal with std
/// 1e-2, networks fan-in uniform, tower output weights all ones.
pub fn init_model<T: Scalar>(variant: &ModelVariant, dims: ModelDims, seed: u64, hyper: Hyperparams) -> Result<Model<T>> {
    variant.validate()?;
    if dims.users == 0 || dims.items == 0 || dims.k == 0 {
        return Err(Error::config("model dimensions must be positive"));
    }
    if variant.has_content() && dims.features == 0 {
        return Err(Error::config("content models need a positive feature width"));
    }
    let users = normal_matrix(dims.users, dims.k, EMBEDDING_INIT_STD, &mut init_rng(seed, InitStream::Users));
    let items = variant
        .has_item_embeddings()
        .then(|| normal_matrix(dims.items, dims.k, EMBEDDING_INIT_STD, &mut init_rng(seed, InitStream::Items)));
    let extractor = if variant.has_content() {
        Some(ContentExtractor::init(
            dims.features,
            dims.k,
            dims.hidden_width,
            dims.content_layers,
            &mut init_rng(seed, InitStream::Content),
        )?)
    } else {
        None
    };
    let interaction = InteractionModel::init(&variant.interaction, dims.k, &mut init_rng(seed, InitStream::Tower))?;
    Ok(Model {
        variant: *variant,
        dims,
        seed,
        hyper,
        embeddings: Embeddings { users, items },
        extractor,
        interaction,
        feature_stats: None,
    })
}

impl<T: Scalar> Model<T> {
    pub fn k(&self) -> usize {
        self.dims.k
    }

    /// Tower as it would be freshly initialized for this model's seed.
    pub fn fresh_interaction(&self) -> Result<InteractionModel<T>> {
        InteractionModel::init(&self.variant.interaction, self.dims.k, &mut init_rng(self.seed, InitStream::Tower))
    }

    pub fn is_finite(&self) -> bool {
        self.embeddings.is_finite()
            && self.extractor.as_ref().is_none_or(|e| e.net.is_finite())
            && self.interaction.net().is_none_or(|n| n.is_finite())
    }

    fn content_vector(&self, item: usize, features: Option<&[T]>) -> Result<Vec<T>> {
        let extractor = self.extractor.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("{} has no content branch", self.variant.name()))
        })?;
        let x = features.ok_or_else(|| Error::MissingFeatures(format!("item {item}")))?;
        extractor.embed(x)
    }

    /// Item representation used for scoring.
    pub fn item_vector(&self, item: usize, features: Option<&[T]>, setting: SplitMode) -> Result<Vec<T>> {
        use crate::models::Coupling::*;
        match (self.variant.coupling, setting) {
            (Strict, _) | (Relaxed, SplitMode::Cold) => self.content_vector(item, features),
            (ContentFree, SplitMode::Cold) => Err(Error::Unsupported(format!(
                "{} cannot score cold-start items",
                self.variant.name()
            ))),
            (Relaxed | ContentFree, SplitMode::Warm) => {
                let h = self.embeddings.items.as_ref().expect("relaxed and content-free models store H");
                if item >= h.rows() {
                    return Err(Error::dim(format!("item {item} out of range for {} items", h.rows())));
                }
                Ok(h.row(item).to_vec())
            }
        }
    }

    /// Item vectors for `items`, one row each, in the given order.
    /// `features` is indexed by item and only consulted when content is needed.
    pub fn item_vectors(
        &self,
        items: &[usize],
        features: Option<&DenseMatrix<T>>,
        setting: SplitMode,
    ) -> Result<DenseMatrix<T>> {
        let mut out = DenseMatrix::zeros(items.len(), self.k());
        for (r, &i) in items.iter().enumerate() {
            let x = match features {
                Some(f) if i < f.rows() => Some(f.row(i)),
                Some(f) => return Err(Error::dim(format!("item {i} out of range for {} feature rows", f.rows()))),
                None => None,
            };
            out.row_mut(r).copy_from_slice(&self.item_vector(i, x, setting)?);
        }
        Ok(out)
    }

    pub fn predict(&self, user: usize, item_vec: &[T]) -> T {
        self.interaction.score(self.embeddings.w(user), item_vec)
    }

    pub fn predict_all_items(
        &self,
        user: usize,
        items: &[usize],
        features: Option<&DenseMatrix<T>>,
        setting: SplitMode,
    ) -> Result<Vec<T>> {
        if user >= self.embeddings.num_users() {
            return Err(Error::dim(format!("user {user} out of range")));
        }
        let vecs = self.item_vectors(items, features, setting)?;
        Ok((0..items.len()).map(|r| self.predict(user, vecs.row(r))).collect())
    }
}
