use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{FeatureTable, InteractionTriplets, Triplet};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Parameters of the planted-model generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub k_true: usize,
    pub num_features: usize,
    pub noise: f64,
    pub density: f64,
    pub seed: u64,
    /// Playcount threshold the generated counts are calibrated against.
    pub tau: u32,
    /// Exponent `γ` of the observation law `p = (1 + γ)·density·q^γ`, where `q`
    /// is the affinity quantile. Larger values concentrate observations on
    /// high-affinity pairs.
    pub sharpness: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_users: 500,
            num_items: 400,
            k_true: 8,
            num_features: 20,
            noise: 0.1,
            density: 0.05,
            seed: 0,
            tau: 7,
            sharpness: 4.0,
        }
    }
}

/// Ground truth behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    /// `U × K`, row `u` is the true user vector.
    pub users: DenseMatrix<f64>,
    /// `I × K`, row `i` is the true item vector.
    pub items: DenseMatrix<f64>,
    /// `K × L` map from features to item vectors.
    pub map: DenseMatrix<f64>,
    /// Median of all true affinities; affinities above it yield relevant counts.
    pub median_affinity: f64,
}

impl PlantedModel {
    pub fn affinity(&self, user: usize, item: usize) -> f64 {
        crate::scalar::dot(self.users.row(user), self.items.row(item))
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub triplets: InteractionTriplets,
    pub features: FeatureTable,
    pub planted: PlantedModel,
}

/// Draws a planted low-rank model whose item vectors are a noisy linear
/// function of the item features, then samples which pairs are observed.
///
/// A pair is observed with probability increasing in the rank of its true
/// affinity (mean probability `density` as long as it stays below
/// `1 / (1 + sharpness)`, where no probability is clipped); observed pairs above the median
/// affinity receive a playcount `≥ tau`, the others a playcount in `1..tau`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if cfg.num_users == 0 || cfg.num_items == 0 || cfg.k_true == 0 || cfg.num_features == 0 {
        return Err(Error::config("synthetic dimensions must be positive"));
    }
    if !(cfg.density > 0.0 && cfg.density <= 1.0) {
        return Err(Error::config(format!("density {} outside (0, 1]", cfg.density)));
    }
    if cfg.noise < 0.0 || cfg.tau < 2 || !(cfg.sharpness >= 0.0) {
        return Err(Error::config("noise and sharpness must be non-negative and tau at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let (nu, ni, k, l) = (cfg.num_users, cfg.num_items, cfg.k_true, cfg.num_features);

    let users = DenseMatrix::from_fn(nu, k, |_, _| normal(&mut rng));
    let map_scale = 1.0 / (l as f64).sqrt();
    let map = DenseMatrix::from_fn(k, l, |_, _| normal(&mut rng) * map_scale);
    let features = DenseMatrix::from_fn(ni, l, |_, _| normal(&mut rng));
    let mut items = DenseMatrix::zeros(ni, k);
    for i in 0..ni {
        let h = map.matvec(features.row(i))?;
        for (dst, v) in items.row_mut(i).iter_mut().zip(h) {
            *dst = v + cfg.noise * normal(&mut rng);
        }
    }

    let n = nu * ni;
    let mut affinity: Vec<(f64, usize)> = Vec::with_capacity(n);
    for u in 0..nu {
        for i in 0..ni {
            affinity.push((crate::scalar::dot(users.row(u), items.row(i)), u * ni + i));
        }
    }
    let mut sorted: Vec<f64> = affinity.iter().map(|a| a.0).collect();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    // quantile of each pair's affinity, in (0, 1)
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| affinity[a].0.total_cmp(&affinity[b].0).then(a.cmp(&b)));
    let mut quantile = vec![0.0; n];
    for (rank, &idx) in order.iter().enumerate() {
        quantile[idx] = (rank as f64 + 0.5) / n as f64;
    }

    let d = cfg.density;
    let gamma = cfg.sharpness;
    let mut entries = Vec::new();
    for (idx, &(a, cell)) in affinity.iter().enumerate() {
        let q = quantile[idx];
        let p = if d >= 1.0 {
            1.0
        } else {
            (1.0 + gamma) * d * q.powf(gamma)
        };
        if !rng.random_bool(p.clamp(0.0, 1.0)) {
            continue;
        }
        let count = if a > median {
            cfg.tau + rng.random_range(0..cfg.tau)
        } else {
            rng.random_range(1..cfg.tau)
        };
        entries.push(Triplet {
            user: cell / ni,
            item: cell % ni,
            count: count as f64,
        });
    }

    Ok(SyntheticDataset {
        triplets: InteractionTriplets::new(entries, nu, ni)?,
        features: FeatureTable::new(features)?,
        planted: PlantedModel {
            users,
            items,
            map,
            median_affinity: median,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_full_density_follows_median_rule() {
        let cfg = SyntheticConfig {
            num_users: 20,
            num_items: 15,
            k_true: 3,
            num_features: 5,
            noise: 0.0,
            density: 1.0,
            seed: 1,
            tau: 7,
            sharpness: 4.0,
        };
        let ds = generate_synthetic(&cfg).unwrap();
        assert_eq!(ds.triplets.len(), 300);
        for t in ds.triplets.entries() {
            let above = ds.planted.affinity(t.user, t.item) > ds.planted.median_affinity;
            assert_eq!(above, t.count >= 7.0);
        }
        // with zero noise the item vectors are exactly the mapped features
        for i in 0..15 {
            let h = ds.planted.map.matvec(ds.features.row(i)).unwrap();
            assert_eq!(h.as_slice(), ds.planted.items.row(i));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SyntheticConfig { num_users: 30, num_items: 20, seed: 5, ..Default::default() };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.triplets, b.triplets);
        assert_eq!(a.features, b.features);
        assert_eq!(a.planted, b.planted);
        let c = generate_synthetic(&SyntheticConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.triplets, c.triplets);
    }

    #[test]
    fn density_close_to_target() {
        let cfg = SyntheticConfig {
            num_users: 200,
            num_items: 150,
            k_true: 8,
            num_features: 20,
            noise: 0.1,
            density: 0.05,
            seed: 3,
            tau: 7,
            sharpness: 4.0,
        };
        let ds = generate_synthetic(&cfg).unwrap();
        let observed = ds.triplets.entries().len() as f64 / (200.0 * 150.0);
        assert!((observed - 0.05).abs() <= 0.2 * 0.05, "density {observed}");
    }

    #[test]
    fn degenerate_sizes_rejected() {
        for cfg in [
            SyntheticConfig { num_users: 0, ..Default::default() },
            SyntheticConfig { k_true: 0, ..Default::default() },
            SyntheticConfig { density: 0.0, ..Default::default() },
            SyntheticConfig { density: 1.5, ..Default::default() },
            SyntheticConfig { sharpness: -1.0, ..Default::default() },
        ] {
            assert!(generate_synthetic(&cfg).is_err());
        }
    }
}
