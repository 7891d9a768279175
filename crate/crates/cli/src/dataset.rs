//! On-disk layout of a prepared dataset.
//!
//! ```text
//! triplets.tsv   user  item  count       (filtered)
//! users.txt      one user name per line, in index order
//! items.txt      one item name per line, in index order
//! features.tsv   item  v1 .. vL          (optional)
//! split_cold.txt split_warm.txt          split manifests
//! standardization.tsv                    per-fold feature statistics
//! manifest.tsv                           counts per bucket
//! planted.tsv                            synthetic ground truth (synth only)
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ncacf_core::data::{load_features, load_triplets, FeatureTable, InteractionTriplets, SplitMode, SplitPlan, Triplet};

use crate::error::{CliError, CliResult};

pub const TRIPLETS: &str = "triplets.tsv";
pub const USERS: &str = "users.txt";
pub const ITEMS: &str = "items.txt";
pub const FEATURES: &str = "features.tsv";
pub const MANIFEST: &str = "manifest.tsv";
pub const STANDARDIZATION: &str = "standardization.tsv";
pub const PLANTED: &str = "planted.tsv";

pub fn split_file(mode: SplitMode) -> String {
    format!("split_{mode}.txt")
}

pub struct PreparedDataset {
    pub dir: PathBuf,
    pub triplets: InteractionTriplets,
    pub features: Option<FeatureTable>,
}

fn read_names(path: &Path) -> CliResult<Vec<String>> {
    let f = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    BufReader::new(f)
        .lines()
        .map(|l| l.map_err(CliError::from))
        .collect()
}

fn write_names(path: &Path, names: &[String]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for n in names {
        writeln!(w, "{n}")?;
    }
    w.flush()?;
    Ok(())
}

impl PreparedDataset {
    pub fn write(dir: &Path, triplets: &InteractionTriplets, features: Option<&FeatureTable>) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(TRIPLETS))?);
        triplets.write_tsv(&mut w)?;
        w.flush()?;
        write_names(&dir.join(USERS), triplets.user_names())?;
        write_names(&dir.join(ITEMS), triplets.item_names())?;
        if let Some(f) = features {
            let mut w = BufWriter::new(File::create(dir.join(FEATURES))?);
            f.write_tsv(&mut w, triplets.item_names())?;
            w.flush()?;
        }
        Ok(())
    }

    /// Loads triplets with ids in the order of the name lists, so indices
    /// match the split manifests.
    pub fn load(dir: &Path) -> CliResult<Self> {
        if !dir.join(TRIPLETS).exists() {
            return Err(CliError::Data(format!(
                "{} is not a prepared dataset (run `prepare` or `synth` first)",
                dir.display()
            )));
        }
        let raw = load_triplets(dir.join(TRIPLETS))?;
        let users = read_names(&dir.join(USERS))?;
        let items = read_names(&dir.join(ITEMS))?;
        let uidx: HashMap<&str, usize> = users.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let iidx: HashMap<&str, usize> = items.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let lookup = |map: &HashMap<&str, usize>, name: &str, what: &str| {
            map.get(name)
                .copied()
                .ok_or_else(|| CliError::Data(format!("{what} `{name}` missing from the name list")))
        };
        let entries = raw
            .entries()
            .iter()
            .map(|t| {
                Ok(Triplet {
                    user: lookup(&uidx, &raw.user_names()[t.user], "user")?,
                    item: lookup(&iidx, &raw.item_names()[t.item], "item")?,
                    count: t.count,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let triplets = InteractionTriplets::with_names(entries, users, items)?;
        let features = if dir.join(FEATURES).exists() {
            Some(load_features(dir.join(FEATURES), triplets.item_names())?)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            triplets,
            features,
        })
    }

    pub fn plan(&self, mode: SplitMode) -> CliResult<SplitPlan> {
        let path = self.dir.join(split_file(mode));
        let f = File::open(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(SplitPlan::read_manifest(BufReader::new(f), &self.triplets)?)
    }
}
