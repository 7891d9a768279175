#![allow(dead_code)]

use ncacf_core::data::{InteractionTriplets, Signal, SparsePlaycounts, Triplet};
use ncacf_core::models::{init_model, Hyperparams, Model, ModelDims, ModelVariant};
use ncacf_core::numerics::DenseMatrix;
use ncacf_core::training::TrainSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random playcounts: each pair observed with probability `density`,
/// counts in 1..=14 so both sides of the threshold occur.
pub fn random_triplets(nu: usize, ni: usize, density: f64, seed: u64) -> InteractionTriplets {
    let mut r = rng(seed);
    let mut entries = Vec::new();
    for u in 0..nu {
        for i in 0..ni {
            if r.random_bool(density) {
                entries.push(Triplet {
                    user: u,
                    item: i,
                    count: r.random_range(1..=14) as f64,
                });
            }
        }
    }
    InteractionTriplets::new(entries, nu, ni).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> DenseMatrix<f64> {
    let mut r = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
}

/// Training set over every item with random features of width `l`.
pub fn tiny_set(nu: usize, ni: usize, l: usize, seed: u64) -> TrainSet<f64> {
    let t = random_triplets(nu, ni, 0.4, seed);
    let sparse = SparsePlaycounts::from_triplets(&t, None);
    let feats = (l > 0).then(|| random_matrix(ni, l, 1.0, seed + 1000));
    TrainSet::new(&sparse, &Signal::default(), (0..ni).collect(), feats).unwrap()
}

pub fn tiny_model(variant: &ModelVariant, set: &TrainSet<f64>, k: usize, hyper: Hyperparams, seed: u64) -> Model<f64> {
    let dims = ModelDims {
        users: set.num_users(),
        items: set.num_items(),
        k,
        features: set.features().map_or(0, |f| f.cols()),
        hidden_width: 5,
        content_layers: 2,
    };
    init_model(variant, dims, seed, hyper).unwrap()
}

/// Embeddings scaled up so scores are not all near zero.
pub fn inflate(model: &mut Model<f64>, seed: u64) {
    let mut r = rng(seed);
    for v in model.embeddings.users.as_mut_slice() {
        *v = r.random_range(-1.0..1.0);
    }
    if let Some(h) = &mut model.embeddings.items {
        for v in h.as_mut_slice() {
            *v = r.random_range(-1.0..1.0);
        }
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
