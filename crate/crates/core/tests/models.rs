mod common;

use common::*;
use ncacf_core::data::SplitMode;
use ncacf_core::models::*;
use ncacf_core::numerics::{Activation, DenseMatrix};
use rand::Rng;

fn dims(users: usize, items: usize, k: usize, features: usize) -> ModelDims {
    ModelDims {
        hidden_width: 6,
        content_layers: 2,
        ..ModelDims::new(users, items, k, features)
    }
}

fn gmf_variant() -> ModelVariant {
    let mut v = ModelVariant::ncacf(Coupling::Relaxed, Combination::Multiplication, 0).unwrap();
    v.interaction.output_activation = Activation::Identity;
    v.interaction.train_output = false;
    v
}

#[test]
fn same_seed_same_parameters() {
    let v = ModelVariant::ncacf(Coupling::Relaxed, Combination::Concatenation, 2).unwrap();
    let a: Model<f64> = init_model(&v, dims(7, 9, 4, 3), 11, Hyperparams::default()).unwrap();
    let b: Model<f64> = init_model(&v, dims(7, 9, 4, 3), 11, Hyperparams::default()).unwrap();
    assert_eq!(a, b);
    let c: Model<f64> = init_model(&v, dims(7, 9, 4, 3), 12, Hyperparams::default()).unwrap();
    assert_ne!(a.embeddings.users, c.embeddings.users);
}

#[test]
fn embedding_init_std() {
    let m: Model<f64> = init_model(&ModelVariant::wmf(), dims(1000, 100, 100, 0), 3, Hyperparams::default()).unwrap();
    let vals = m.embeddings.users.as_slice();
    assert_eq!(vals.len(), 100_000);
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    assert!((std / EMBEDDING_INIT_STD - 1.0).abs() < 0.05, "std {std}");
}

#[test]
fn tower_output_starts_at_ones() {
    let v = ModelVariant::ncacf(Coupling::Strict, Combination::Concatenation, 3).unwrap();
    let m: Model<f64> = init_model(&v, dims(3, 4, 8, 2), 0, Hyperparams::default()).unwrap();
    let net = m.interaction.net().unwrap();
    let out = net.layers().last().unwrap();
    assert_eq!(out.weights.shape(), (1, 4));
    assert!(out.weights.as_slice().iter().all(|&w| w == 1.0));
    assert!(out.bias.is_none());
    assert_eq!(out.activation, Activation::Sigmoid);
    let widths: Vec<usize> = net.layers().iter().map(|l| l.outputs()).collect();
    assert_eq!(widths, vec![16, 8, 4, 1]);
}

#[test]
fn content_network_shape() {
    let v = ModelVariant::linear(Family::MfUni, Coupling::Relaxed).unwrap();
    let d = ModelDims {
        hidden_width: 7,
        content_layers: 3,
        ..ModelDims::new(2, 3, 4, 5)
    };
    let m: Model<f64> = init_model(&v, d, 0, Hyperparams::default()).unwrap();
    let layers = m.extractor.as_ref().unwrap().net.layers();
    let acts: Vec<Activation> = layers.iter().map(|l| l.activation).collect();
    assert_eq!(acts, vec![Activation::Relu, Activation::Relu, Activation::Identity]);
    assert_eq!(layers[0].weights.shape(), (7, 5));
    assert_eq!(layers[2].weights.shape(), (4, 7));
    let bound = (3.0f64 / 5.0).sqrt();
    assert!(layers[0].weights.as_slice().iter().all(|w| w.abs() <= bound));
}

#[test]
fn strict_models_store_no_item_embeddings() {
    let v = ModelVariant::linear(Family::MfUni, Coupling::Strict).unwrap();
    let m: Model<f64> = init_model(&v, dims(3, 4, 2, 2), 0, Hyperparams::default()).unwrap();
    assert!(m.embeddings.items.is_none());
    assert!(init_model::<f64>(&v, dims(3, 4, 2, 0), 0, Hyperparams::default()).is_err());
    assert!(init_model::<f64>(&v, dims(0, 4, 2, 2), 0, Hyperparams::default()).is_err());
}

#[test]
fn item_vector_rules() {
    let relaxed = ModelVariant::linear(Family::MfHybrid, Coupling::Relaxed).unwrap();
    let m: Model<f64> = init_model(&relaxed, dims(2, 5, 3, 4), 1, Hyperparams::default()).unwrap();
    let x = [0.3, -1.0, 2.0, 0.5];
    let warm = m.item_vector(3, Some(&x), SplitMode::Warm).unwrap();
    assert_eq!(warm, m.embeddings.items.as_ref().unwrap().row(3));
    let cold = m.item_vector(3, Some(&x), SplitMode::Cold).unwrap();
    assert_eq!(cold, m.extractor.as_ref().unwrap().embed(&x).unwrap());
    assert!(m.item_vector(3, None, SplitMode::Cold).is_err());

    let strict = ModelVariant::linear(Family::MfHybrid, Coupling::Strict).unwrap();
    let s: Model<f64> = init_model(&strict, dims(2, 5, 3, 4), 1, Hyperparams::default()).unwrap();
    let phi = s.extractor.as_ref().unwrap().embed(&x).unwrap();
    assert_eq!(s.item_vector(0, Some(&x), SplitMode::Warm).unwrap(), phi);
    assert_eq!(s.item_vector(0, Some(&x), SplitMode::Cold).unwrap(), phi);

    let w: Model<f64> = init_model(&ModelVariant::wmf(), dims(2, 5, 3, 0), 1, Hyperparams::default()).unwrap();
    assert!(w.item_vector(1, None, SplitMode::Warm).is_ok());
    assert!(matches!(w.item_vector(1, None, SplitMode::Cold), Err(ncacf_core::Error::Unsupported(_))));
}

#[test]
fn dot_product_prediction() {
    let mut m: Model<f64> = init_model(&ModelVariant::wmf(), dims(1, 1, 2, 0), 0, Hyperparams::default()).unwrap();
    m.embeddings.users.row_mut(0).copy_from_slice(&[1.0, 0.0]);
    assert_eq!(m.predict(0, &[0.5, 9.0]), 0.5);
}

#[test]
fn gmf_reduces_to_dot_product() {
    let v = gmf_variant();
    let deep: Model<f64> = init_model(&v, dims(20, 30, 6, 3), 4, Hyperparams::default()).unwrap();
    let mut r = rng(9);
    for _ in 0..100 {
        let w: Vec<f64> = (0..6).map(|_| r.random_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..6).map(|_| r.random_range(-2.0..2.0)).collect();
        let a = deep.interaction.score(&w, &h);
        let b: f64 = w.iter().zip(&h).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn deep_scores_lie_in_unit_interval() {
    for comb in [Combination::Multiplication, Combination::Concatenation] {
        let v = ModelVariant::ncacf(Coupling::Relaxed, comb, 2).unwrap();
        let mut m: Model<f64> = init_model(&v, dims(10, 10, 4, 2), 2, Hyperparams::default()).unwrap();
        inflate(&mut m, 5);
        for u in 0..10 {
            for i in 0..10 {
                let s = m.predict(u, m.embeddings.items.as_ref().unwrap().row(i));
                assert!(s > 0.0 && s < 1.0);
            }
        }
    }
}

#[test]
fn predict_all_items_matches_loop() {
    let v = ModelVariant::ncacf(Coupling::Relaxed, Combination::Concatenation, 1).unwrap();
    let mut m: Model<f64> = init_model(&v, dims(4, 12, 3, 5), 8, Hyperparams::default()).unwrap();
    inflate(&mut m, 1);
    let feats = random_matrix(12, 5, 1.0, 3);
    for setting in [SplitMode::Warm, SplitMode::Cold] {
        let items: Vec<usize> = (0..12).collect();
        let batch = m.predict_all_items(2, &items, Some(&feats), setting).unwrap();
        for (&i, s) in items.iter().zip(&batch) {
            let v = m.item_vector(i, Some(feats.row(i)), setting).unwrap();
            assert!((m.predict(2, &v) - s).abs() <= 1e-12);
        }
        let single = m.predict_all_items(2, &[7], Some(&feats), setting).unwrap();
        assert_eq!(single, vec![batch[7]]);
        let perm = [5, 0, 11, 3];
        let permuted = m.predict_all_items(2, &perm, Some(&feats), setting).unwrap();
        for (p, s) in perm.iter().zip(permuted) {
            assert_eq!(s, batch[*p]);
        }
    }
}

#[test]
fn strict_warm_equals_cold() {
    let v = ModelVariant::ncacf(Coupling::Strict, Combination::Multiplication, 1).unwrap();
    let m: Model<f64> = init_model(&v, dims(3, 6, 4, 3), 0, Hyperparams::default()).unwrap();
    let feats = random_matrix(6, 3, 1.0, 4);
    let items: Vec<usize> = (0..6).collect();
    for u in 0..3 {
        assert_eq!(
            m.predict_all_items(u, &items, Some(&feats), SplitMode::Warm).unwrap(),
            m.predict_all_items(u, &items, Some(&feats), SplitMode::Cold).unwrap()
        );
    }
}

#[test]
fn deep_towers_clamp_at_one() {
    let v = ModelVariant::ncacf(Coupling::Relaxed, Combination::Multiplication, 5).unwrap();
    let m: Model<f64> = init_model(&v, dims(2, 2, 4, 2), 0, Hyperparams::default()).unwrap();
    let widths: Vec<usize> = m.interaction.net().unwrap().layers().iter().map(|l| l.outputs()).collect();
    assert_eq!(widths, vec![4, 2, 1, 1, 1, 1]);
    assert_eq!(tower_widths(4, 5).1, true);
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let feats = random_matrix(9, 3, 1.0, 2);
    let variants = [
        ModelVariant::wmf(),
        ModelVariant::linear(Family::Dcb, Coupling::Strict).unwrap(),
        ModelVariant::linear(Family::MfUni, Coupling::Relaxed).unwrap(),
        ModelVariant::ncacf(Coupling::Relaxed, Combination::Concatenation, 2).unwrap(),
        ModelVariant::ncf(Combination::Multiplication, 1),
    ];
    for v in variants {
        let mut m: Model<f64> = init_model(&v, dims(5, 9, 4, 3), 6, Hyperparams { eta: 3e-3, ..Default::default() }).unwrap();
        m.feature_stats = Some(FeatureStats {
            means: vec![0.1, 0.2, 0.3],
            stds: vec![1.5, 2.5, 3.5],
        });
        inflate(&mut m, 2);
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        let back: Model<f64> = read_model(&mut buf.as_slice()).unwrap();
        assert_eq!(back, m);
        let f = v.has_content().then_some(&feats);
        let items: Vec<usize> = (0..9).collect();
        for u in 0..5 {
            let a = m.predict_all_items(u, &items, f, SplitMode::Warm).unwrap();
            let b = back.predict_all_items(u, &items, f, SplitMode::Warm).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

#[test]
fn checkpoint_files_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let m: Model<f64> = init_model(&ModelVariant::wmf(), dims(3, 3, 2, 0), 0, Hyperparams::default()).unwrap();
    save_model(&path, &m).unwrap();
    assert_eq!(load_model::<f64>(&path).unwrap(), m);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    assert!(matches!(read_model::<f64>(&mut bytes.as_slice()), Err(ncacf_core::Error::Checkpoint(_))));
}

#[test]
fn single_precision_models_work() {
    let v = ModelVariant::ncacf(Coupling::Relaxed, Combination::Multiplication, 1).unwrap();
    let m: Model<f32> = init_model(&v, dims(3, 4, 4, 2), 0, Hyperparams::default()).unwrap();
    let feats = DenseMatrix::<f32>::from_fn(4, 2, |r, c| (r + c) as f32 * 0.1);
    let s = m.predict_all_items(0, &[0, 1, 2, 3], Some(&feats), SplitMode::Cold).unwrap();
    assert!(s.iter().all(|v| *v > 0.0 && *v < 1.0));
    let mut buf = Vec::new();
    write_model(&mut buf, &m).unwrap();
    let back: Model<f32> = read_model(&mut buf.as_slice()).unwrap();
    assert_eq!(back, m);
}
