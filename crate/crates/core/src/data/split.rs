//! Validation/fold assignment for cross-validation.
//!
//! In cold mode the unit of assignment is an item; in warm mode it is a single
//! observed interaction. Warm plans additionally pin one interaction per item
//! to the training side so every item that appears in an evaluation bucket
//! stays trainable whichever fold is held out.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::InteractionTriplets;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Warm,
    Cold,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Warm => "warm",
            SplitMode::Cold => "cold",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "warm" => Ok(SplitMode::Warm),
            "cold" => Ok(SplitMode::Cold),
            other => Err(Error::config(format!("unknown split mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub mode: SplitMode,
    pub num_folds: usize,
    pub val_fraction: f64,
    pub seed: u64,
    /// Items (cold) or triplet indices (warm), ascending.
    pub validation: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
    /// Warm mode only: triplets that always belong to the training side.
    pub pinned: Vec<usize>,
    /// Size of the unit universe (items or triplets).
    pub num_units: usize,
}

/// Bucket membership once a test fold has been chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldView {
    pub test_fold: usize,
    /// Triplet indices per bucket.
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    /// Items present in each bucket, ascending.
    pub train_items: Vec<usize>,
    pub validation_items: Vec<usize>,
    pub test_items: Vec<usize>,
}

fn validation_size(units: usize, val_fraction: f64) -> usize {
    // tolerate representation error such as 0.1 * 30 = 3.0000000000000004
    ((val_fraction * units as f64) - 1e-9).ceil().max(0.0) as usize
}

fn check_fraction(val_fraction: f64, num_folds: usize) -> Result<()> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InfeasibleSplit(format!(
            "validation fraction {val_fraction} outside (0, 1)"
        )));
    }
    if num_folds == 0 {
        return Err(Error::InfeasibleSplit("at least one fold is required".into()));
    }
    Ok(())
}

/// Deals `units` into `num_folds` contiguous chunks whose sizes differ by at most one.
fn deal(units: &[usize], num_folds: usize) -> Vec<Vec<usize>> {
    let base = units.len() / num_folds;
    let extra = units.len() % num_folds;
    let mut out = Vec::with_capacity(num_folds);
    let mut start = 0;
    for f in 0..num_folds {
        let len = base + usize::from(f < extra);
        let mut fold = units[start..start + len].to_vec();
        fold.sort_unstable();
        out.push(fold);
        start += len;
    }
    out
}

/// Random item partition: `⌈val_fraction·I⌉` validation items, the rest into
/// `num_folds` near-equal folds.
pub fn split_cold(num_items: usize, num_folds: usize, val_fraction: f64, seed: u64) -> Result<SplitPlan> {
    check_fraction(val_fraction, num_folds)?;
    let n_val = validation_size(num_items, val_fraction);
    if num_items < num_folds + n_val {
        return Err(Error::InfeasibleSplit(format!(
            "{num_items} items cannot fill {n_val} validation items and {num_folds} non-empty folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut units: Vec<usize> = (0..num_items).collect();
    units.shuffle(&mut rng);
    let mut validation = units[..n_val].to_vec();
    validation.sort_unstable();
    Ok(SplitPlan {
        mode: SplitMode::Cold,
        num_folds,
        val_fraction,
        seed,
        validation,
        folds: deal(&units[n_val..], num_folds),
        pinned: Vec::new(),
        num_units: num_items,
    })
}

/// Random interaction partition. One uniformly drawn interaction per item is
/// pinned to training; `⌈val_fraction·n⌉` of the remaining interactions form
/// the validation set and the rest is dealt into folds.
pub fn split_warm(triplets: &InteractionTriplets, num_folds: usize, val_fraction: f64, seed: u64) -> Result<SplitPlan> {
    check_fraction(val_fraction, num_folds)?;
    let n = triplets.len();
    let n_val = validation_size(n, val_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut per_item: Vec<Vec<usize>> = vec![Vec::new(); triplets.num_items()];
    for (idx, t) in triplets.entries().iter().enumerate() {
        per_item[t.item].push(idx);
    }
    let mut is_pinned = vec![false; n];
    let mut pinned = Vec::new();
    for members in per_item.iter().filter(|m| !m.is_empty()) {
        let pick = members[rng.random_range(0..members.len())];
        is_pinned[pick] = true;
        pinned.push(pick);
    }
    pinned.sort_unstable();

    let mut units: Vec<usize> = (0..n).filter(|&i| !is_pinned[i]).collect();
    if units.len() < num_folds + n_val {
        return Err(Error::InfeasibleSplit(format!(
            "{} unpinned interactions cannot fill {n_val} validation interactions and {num_folds} non-empty folds",
            units.len()
        )));
    }
    units.shuffle(&mut rng);
    let mut validation = units[..n_val].to_vec();
    validation.sort_unstable();
    Ok(SplitPlan {
        mode: SplitMode::Warm,
        num_folds,
        val_fraction,
        seed,
        validation,
        folds: deal(&units[n_val..], num_folds),
        pinned,
        num_units: n,
    })
}

impl SplitPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        self.folds.iter().map(Vec::len).collect()
    }

    /// Resolves bucket membership with `test_fold` held out.
    pub fn view(&self, triplets: &InteractionTriplets, test_fold: usize) -> Result<FoldView> {
        if test_fold >= self.num_folds {
            return Err(Error::config(format!(
                "test fold {test_fold} out of range for {} folds",
                self.num_folds
            )));
        }
        let expected = match self.mode {
            SplitMode::Cold => triplets.num_items(),
            SplitMode::Warm => triplets.len(),
        };
        if expected != self.num_units {
            return Err(Error::dim(format!(
                "split plan covers {} units but the dataset has {expected}",
                self.num_units
            )));
        }
        // 0 = train, 1 = validation, 2 = test
        let mut bucket = vec![0u8; self.num_units];
        for &u in &self.validation {
            bucket[u] = 1;
        }
        for &u in &self.folds[test_fold] {
            bucket[u] = 2;
        }
        let mut view = FoldView {
            test_fold,
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
            train_items: Vec::new(),
            validation_items: Vec::new(),
            test_items: Vec::new(),
        };
        let mut item_sets: [BTreeSet<usize>; 3] = Default::default();
        for (idx, t) in triplets.entries().iter().enumerate() {
            let b = match self.mode {
                SplitMode::Cold => bucket[t.item],
                SplitMode::Warm => bucket[idx],
            };
            match b {
                0 => view.train.push(idx),
                1 => view.validation.push(idx),
                _ => view.test.push(idx),
            }
            item_sets[b as usize].insert(t.item);
        }
        if self.mode == SplitMode::Cold {
            // buckets own their items even when an item has no interactions
            item_sets = Default::default();
            for (item, &b) in bucket.iter().enumerate() {
                item_sets[b as usize].insert(item);
            }
        }
        let [tr, va, te] = item_sets;
        view.train_items = tr.into_iter().collect();
        view.validation_items = va.into_iter().collect();
        view.test_items = te.into_iter().collect();
        Ok(view)
    }

    /// Writes the plan as a line-oriented text manifest. Warm units are written
    /// as `user:item` pairs of dense ids so the manifest is independent of the
    /// in-memory triplet order.
    pub fn write_manifest(&self, mut w: impl Write, triplets: &InteractionTriplets) -> Result<()> {
        let unit = |u: usize| match self.mode {
            SplitMode::Cold => u.to_string(),
            SplitMode::Warm => {
                let t = triplets.entries()[u];
                format!("{}:{}", t.user, t.item)
            }
        };
        let list = |units: &[usize]| units.iter().map(|&u| unit(u)).collect::<Vec<_>>().join(" ");
        writeln!(w, "mode\t{}", self.mode)?;
        writeln!(w, "seed\t{}", self.seed)?;
        writeln!(w, "num_folds\t{}", self.num_folds)?;
        writeln!(w, "val_fraction\t{}", self.val_fraction)?;
        writeln!(w, "num_units\t{}", self.num_units)?;
        writeln!(w, "validation\t{}", list(&self.validation))?;
        writeln!(w, "pinned\t{}", list(&self.pinned))?;
        for (f, fold) in self.folds.iter().enumerate() {
            writeln!(w, "fold\t{f}\t{}", list(fold))?;
        }
        Ok(())
    }

    pub fn read_manifest(r: impl BufRead, triplets: &InteractionTriplets) -> Result<Self> {
        let bad = |m: String| Error::config(format!("split manifest: {m}"));
        let mut fields: HashMap<String, String> = HashMap::new();
        let mut folds: Vec<(usize, String)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let key = parts.next().unwrap().to_string();
            let rest = parts.next().unwrap_or("").to_string();
            if key == "fold" {
                let mut p = rest.splitn(2, '\t');
                let idx = p.next().unwrap().parse().map_err(|_| bad("bad fold index".into()))?;
                folds.push((idx, p.next().unwrap_or("").to_string()));
            } else {
                fields.insert(key, rest);
            }
        }
        let get = |k: &str| fields.get(k).cloned().ok_or_else(|| bad(format!("missing `{k}`")));
        let mode: SplitMode = get("mode")?.parse()?;
        let parse_num = |k: &str| -> Result<u64> { get(k)?.trim().parse().map_err(|_| bad(format!("bad `{k}`"))) };
        let seed = parse_num("seed")?;
        let num_folds = parse_num("num_folds")? as usize;
        let num_units = parse_num("num_units")? as usize;
        let val_fraction: f64 = get("val_fraction")?.trim().parse().map_err(|_| bad("bad `val_fraction`".into()))?;
        let parse_units = |s: &str| -> Result<Vec<usize>> {
            s.split_whitespace()
                .map(|tok| match mode {
                    SplitMode::Cold => tok.parse().map_err(|_| bad(format!("bad unit `{tok}`"))),
                    SplitMode::Warm => {
                        let (u, i) = tok.split_once(':').ok_or_else(|| bad(format!("bad pair `{tok}`")))?;
                        let u = u.parse().map_err(|_| bad(format!("bad pair `{tok}`")))?;
                        let i = i.parse().map_err(|_| bad(format!("bad pair `{tok}`")))?;
                        triplets
                            .find(u, i)
                            .ok_or_else(|| bad(format!("pair `{tok}` not in dataset")))
                    }
                })
                .collect()
        };
        folds.sort_by_key(|f| f.0);
        if folds.len() != num_folds || folds.iter().enumerate().any(|(i, f)| f.0 != i) {
            return Err(bad("fold lines do not match num_folds".into()));
        }
        Ok(Self {
            mode,
            num_folds,
            val_fraction,
            seed,
            validation: parse_units(&get("validation")?)?,
            folds: folds.iter().map(|(_, s)| parse_units(s)).collect::<Result<_>>()?,
            pinned: parse_units(&fields.get("pinned").cloned().unwrap_or_default())?,
            num_units,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Triplet;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn random_triplets(seed: u64, nu: usize, ni: usize, p: f64) -> InteractionTriplets {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for u in 0..nu {
            for i in 0..ni {
                if rng.random_bool(p) {
                    e.push(Triplet { user: u, item: i, count: rng.random_range(1..20) as f64 });
                }
            }
        }
        InteractionTriplets::new(e, nu, ni).unwrap()
    }

    fn assert_partition(plan: &SplitPlan) {
        let mut seen = vec![0u32; plan.num_units];
        for &u in plan.validation.iter().chain(plan.folds.iter().flatten()).chain(&plan.pinned) {
            seen[u] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1), "units must be covered exactly once");
    }

    #[test]
    fn cold_sizes() {
        let plan = split_cold(10, 4, 0.2, 7).unwrap();
        assert_eq!(plan.validation.len(), 2);
        assert_eq!(plan.fold_sizes(), vec![2, 2, 2, 2]);
        assert_partition(&plan);
        assert_eq!(plan, split_cold(10, 4, 0.2, 7).unwrap());
        assert_ne!(plan, split_cold(10, 4, 0.2, 8).unwrap());
    }

    #[test]
    fn cold_infeasible() {
        // 2 validation items leave 8 for 10 folds
        assert!(matches!(split_cold(10, 10, 0.2, 1), Err(Error::InfeasibleSplit(_))));
        assert!(split_cold(10, 2, 0.0, 1).is_err());
        assert!(split_cold(10, 2, 1.0, 1).is_err());
    }

    #[test]
    fn warm_single_interaction_item_is_always_training() {
        let mut e = vec![Triplet { user: 0, item: 0, count: 3.0 }];
        for u in 0..10 {
            e.push(Triplet { user: u, item: 1, count: 1.0 });
        }
        let t = InteractionTriplets::new(e, 10, 2).unwrap();
        for seed in 0..20 {
            let plan = split_warm(&t, 2, 0.2, seed).unwrap();
            let lone = t.find(0, 0).unwrap();
            assert!(plan.pinned.contains(&lone));
            assert_partition(&plan);
        }
    }

    #[test]
    fn warm_two_interaction_item_keeps_one_for_training() {
        let mut e = vec![Triplet { user: 0, item: 0, count: 3.0 }, Triplet { user: 1, item: 0, count: 3.0 }];
        for u in 0..10 {
            e.push(Triplet { user: u, item: 1, count: 1.0 });
        }
        let t = InteractionTriplets::new(e, 10, 2).unwrap();
        for seed in 0..20 {
            let plan = split_warm(&t, 2, 0.2, seed).unwrap();
            for f in 0..2 {
                let v = plan.view(&t, f).unwrap();
                let in_eval = v.validation.iter().chain(&v.test).any(|&i| t.entries()[i].item == 0);
                let in_train = v.train.iter().any(|&i| t.entries()[i].item == 0);
                assert!(!in_eval || in_train);
            }
        }
    }

    #[test]
    fn warm_random_instance_never_orphans_evaluation_items() {
        let t = random_triplets(3, 50, 40, 0.1);
        let plan = split_warm(&t, 5, 0.2, 11).unwrap();
        assert_partition(&plan);
        for f in 0..5 {
            let v = plan.view(&t, f).unwrap();
            for &idx in v.validation.iter().chain(&v.test) {
                let item = t.entries()[idx].item;
                // exhaustive membership scan
                assert!(v.train.iter().any(|&j| t.entries()[j].item == item), "item {item} orphaned");
            }
        }
    }

    #[test]
    fn manifest_round_trip() {
        let t = random_triplets(5, 20, 15, 0.3);
        for plan in [split_cold(15, 3, 0.2, 4).unwrap(), split_warm(&t, 3, 0.2, 4).unwrap()] {
            let mut buf = Vec::new();
            plan.write_manifest(&mut buf, &t).unwrap();
            let back = SplitPlan::read_manifest(buf.as_slice(), &t).unwrap();
            assert_eq!(back, plan);
        }
    }

    #[test]
    fn cold_view_buckets() {
        let t = random_triplets(9, 12, 10, 0.5);
        let plan = split_cold(10, 4, 0.2, 2).unwrap();
        let v = plan.view(&t, 1).unwrap();
        assert_eq!(v.validation_items, plan.validation);
        assert_eq!(v.test_items, plan.folds[1]);
        assert_eq!(v.train_items.len() + v.validation_items.len() + v.test_items.len(), 10);
        assert_eq!(v.train.len() + v.validation.len() + v.test.len(), t.len());
        assert!(plan.view(&t, 4).is_err());
    }

    proptest! {
        #[test]
        fn cold_plans_partition_items(n in 5usize..200, folds in 1usize..6, vf in 0.05f64..0.5, seed in 0u64..1000) {
            match split_cold(n, folds, vf, seed) {
                Ok(plan) => {
                    assert_partition(&plan);
                    let sizes = plan.fold_sizes();
                    prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                    prop_assert_eq!(plan.validation.len(), (vf * n as f64 - 1e-9).ceil() as usize);
                }
                Err(_) => prop_assert!(n < folds + (vf * n as f64 - 1e-9).ceil() as usize),
            }
        }
    }
}
