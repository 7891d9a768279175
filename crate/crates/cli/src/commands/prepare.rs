use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ncacf_core::data::{
    filter_activity, load_features, load_triplets, split_cold, split_warm, standardize_features, FeatureTable,
    InteractionTriplets, Signal, SplitMode, SplitPlan,
};

use crate::config::ExperimentConfig;
use crate::dataset::{self, PreparedDataset};
use crate::error::CliResult;

/// Per-bucket counts of one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketStats {
    pub users: usize,
    pub songs: usize,
    pub interactions: usize,
    pub relevant: usize,
}

pub fn bucket_stats(triplets: &InteractionTriplets, indices: &[usize], signal: &Signal) -> BucketStats {
    let mut users = BTreeSet::new();
    let mut songs = BTreeSet::new();
    let mut relevant = 0;
    for &idx in indices {
        let t = triplets.entries()[idx];
        users.insert(t.user);
        songs.insert(t.item);
        relevant += usize::from(signal.is_relevant(t.count));
    }
    BucketStats {
        users: users.len(),
        songs: songs.len(),
        interactions: indices.len(),
        relevant,
    }
}

/// Evaluation items of `plan` without a training interaction, over all folds.
pub fn orphan_count(triplets: &InteractionTriplets, plan: &SplitPlan) -> CliResult<usize> {
    let mut orphans = 0;
    for fold in 0..plan.num_folds {
        let view = plan.view(triplets, fold)?;
        let mut trained = vec![false; triplets.num_items()];
        for &idx in &view.train {
            trained[triplets.entries()[idx].item] = true;
        }
        orphans += view
            .validation
            .iter()
            .chain(&view.test)
            .map(|&idx| triplets.entries()[idx].item)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter(|&i| !trained[i])
            .count();
    }
    Ok(orphans)
}

/// Filters, splits and writes a dataset from raw files.
pub fn prepare_from(
    cfg: &ExperimentConfig,
    triplets_path: &Path,
    features_path: Option<&Path>,
    out: &Path,
) -> CliResult<PathBuf> {
    let raw = load_triplets(triplets_path)?;
    let filtered = filter_activity(&raw, cfg.data.min_user_songs, cfg.data.min_item_users)?;
    let features = features_path
        .map(|p| load_features(p, filtered.item_names()))
        .transpose()?;
    let plans = [
        split_cold(filtered.num_items(), cfg.split.num_folds, cfg.split.val_fraction, cfg.seed)?,
        split_warm(&filtered, cfg.split.num_folds, cfg.split.val_fraction, cfg.seed)?,
    ];
    PreparedDataset::write(out, &filtered, features.as_ref())?;
    for plan in &plans {
        let mut w = BufWriter::new(File::create(out.join(dataset::split_file(plan.mode)))?);
        plan.write_manifest(&mut w, &filtered)?;
        w.flush()?;
    }
    if let Some(f) = &features {
        write_standardization(&out.join(dataset::STANDARDIZATION), &filtered, f, &plans)?;
    }
    write_manifest(&out.join(dataset::MANIFEST), cfg, &raw, &filtered, features.as_ref(), &plans)?;
    log::info!(
        "prepared {} users, {} items, {} interactions in {}",
        filtered.num_users(),
        filtered.num_items(),
        filtered.len(),
        out.display()
    );
    Ok(out.to_path_buf())
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let triplets = cfg.triplets_path()?;
    let features = cfg.features_path();
    prepare_from(cfg, &triplets, features.as_deref(), &cfg.dataset_dir())
}

fn write_standardization(
    path: &Path,
    triplets: &InteractionTriplets,
    features: &FeatureTable,
    plans: &[SplitPlan],
) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "mode\tfold\tdim\tmean\tstd")?;
    for plan in plans {
        for fold in 0..plan.num_folds {
            let view = plan.view(triplets, fold)?;
            let std = standardize_features(features, &view.train_items)?;
            for (d, (m, s)) in std.means().iter().zip(std.stds()).enumerate() {
                writeln!(w, "{}\t{fold}\t{d}\t{m:?}\t{s:?}", plan.mode)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_manifest(
    path: &Path,
    cfg: &ExperimentConfig,
    raw: &InteractionTriplets,
    filtered: &InteractionTriplets,
    features: Option<&FeatureTable>,
    plans: &[SplitPlan],
) -> CliResult<()> {
    let signal = cfg.hyperparams().signal;
    let mut w = BufWriter::new(File::create(path)?);
    let relevant = filtered.entries().iter().filter(|t| signal.is_relevant(t.count)).count();
    let density = filtered.len() as f64 / (filtered.num_users() * filtered.num_items()) as f64;
    let fields: Vec<(&str, String)> = vec![
        ("order", "filter on raw playcounts, then binarize".into()),
        ("min_user_songs", cfg.data.min_user_songs.to_string()),
        ("min_item_users", cfg.data.min_item_users.to_string()),
        ("tau", signal.tau.to_string()),
        ("raw_users", raw.num_users().to_string()),
        ("raw_songs", raw.num_items().to_string()),
        ("raw_interactions", raw.len().to_string()),
        ("users", filtered.num_users().to_string()),
        ("songs", filtered.num_items().to_string()),
        ("interactions", filtered.len().to_string()),
        ("relevant_interactions", relevant.to_string()),
        ("density", format!("{density:.6}")),
        ("feature_dim", features.map_or(0, |f| f.dim()).to_string()),
        ("seed", cfg.seed.to_string()),
        ("num_folds", cfg.split.num_folds.to_string()),
        ("val_fraction", cfg.split.val_fraction.to_string()),
        ("standardization", "per fold, training songs only, population variance".into()),
    ];
    writeln!(w, "key\tvalue")?;
    for (k, v) in fields {
        writeln!(w, "{k}\t{v}")?;
    }
    for plan in plans {
        writeln!(w, "{}_validation_units\t{}", plan.mode, plan.validation.len())?;
        writeln!(w, "{}_pinned_units\t{}", plan.mode, plan.pinned.len())?;
        let sizes: Vec<String> = plan.fold_sizes().iter().map(usize::to_string).collect();
        writeln!(w, "{}_fold_units\t{}", plan.mode, sizes.join(","))?;
        if plan.mode == SplitMode::Warm {
            writeln!(w, "warm_orphans\t{}", orphan_count(filtered, plan)?)?;
        }
    }
    writeln!(w)?;
    writeln!(w, "mode\tfold\tbucket\tusers\tsongs\tinteractions\trelevant")?;
    for plan in plans {
        for fold in 0..plan.num_folds {
            let view = plan.view(filtered, fold)?;
            for (name, idx, items) in [
                ("train", &view.train, &view.train_items),
                ("validation", &view.validation, &view.validation_items),
                ("test", &view.test, &view.test_items),
            ] {
                let mut s = bucket_stats(filtered, idx, &signal);
                if plan.mode == SplitMode::Cold {
                    s.songs = items.len();
                }
                writeln!(
                    w,
                    "{}\t{fold}\t{name}\t{}\t{}\t{}\t{}",
                    plan.mode, s.users, s.songs, s.interactions, s.relevant
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
