use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Top of a ranking for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: usize,
    /// Cut-off the list was built with.
    pub top_k: usize,
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
}

fn by_rank(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top `top_k` of `candidates` by score, ties broken by ascending item index.
/// `scores[j]` belongs to `candidates[j]`.
pub fn rank_candidates(user: usize, candidates: &[usize], scores: &[f64], top_k: usize) -> Result<RankedList> {
    if top_k == 0 {
        return Err(Error::config("ranking cut-off must be at least 1"));
    }
    if candidates.len() != scores.len() {
        return Err(Error::dim(format!("{} candidates with {} scores", candidates.len(), scores.len())));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(j) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score of item {} is NaN", candidates[j])));
    }
    let mut pairs: Vec<(usize, f64)> = candidates.iter().copied().zip(scores.iter().copied()).collect();
    let k = top_k.min(pairs.len());
    if k < pairs.len() {
        pairs.select_nth_unstable_by(k - 1, by_rank);
        pairs.truncate(k);
    }
    pairs.sort_unstable_by(by_rank);
    Ok(RankedList {
        user,
        top_k,
        items: pairs.iter().map(|p| p.0).collect(),
        scores: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Ranks every item `0..scores.len()` except those in `mask`.
pub fn rank_items(scores: &[f64], top_k: usize, mask: &[usize]) -> Result<RankedList> {
    let mut masked = vec![false; scores.len()];
    for &m in mask {
        if m < masked.len() {
            masked[m] = true;
        }
    }
    let candidates: Vec<usize> = (0..scores.len()).filter(|&i| !masked[i]).collect();
    let s: Vec<f64> = candidates.iter().map(|&i| scores[i]).collect();
    rank_candidates(0, &candidates, &s, top_k)
}

/// `Σ rel_p / log2(p + 1)` over 1-based positions.
pub fn dcg(relevance: &[f64]) -> f64 {
    relevance
        .iter()
        .enumerate()
        .map(|(p, r)| r / ((p + 2) as f64).log2())
        .sum()
}

/// NDCG of `ranked` against `truth`; `None` when `truth` is empty.
/// The ideal list holds `min(|truth|, top_k)` relevant items.
pub fn ndcg_user(ranked: &RankedList, truth: &[usize]) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let rel: Vec<f64> = ranked
        .items
        .iter()
        .map(|i| if truth.contains(i) { 1.0 } else { 0.0 })
        .collect();
    let ideal = vec![1.0; truth.len().min(ranked.top_k)];
    Some(dcg(&rel) / dcg(&ideal))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        let r = rank_items(&[0.1, 0.9, 0.5], 2, &[]).unwrap();
        assert_eq!(r.items, vec![1, 2]);
        let r = rank_items(&[0.3; 5], 5, &[]).unwrap();
        assert_eq!(r.items, vec![0, 1, 2, 3, 4]);
        let r = rank_items(&[0.1, 0.9, 0.5], 3, &[1]).unwrap();
        assert_eq!(r.items, vec![2, 0]);
        assert!(rank_items(&[0.1], 1, &[0]).is_err());
        assert!(rank_items(&[0.1], 0, &[]).is_err());
    }

    #[test]
    fn dcg_examples() {
        assert_eq!(dcg(&[1.0]), 1.0);
        assert!((dcg(&[0.0, 1.0]) - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert!((dcg(&[1.0, 1.0, 1.0]) - 2.130929753571457).abs() < 1e-12);
    }

    #[test]
    fn ndcg_examples() {
        let r = RankedList {
            user: 0,
            top_k: 2,
            items: vec![4, 7],
            scores: vec![1.0, 0.5],
        };
        assert_eq!(ndcg_user(&r, &[4]), Some(1.0));
        assert!((ndcg_user(&r, &[7]).unwrap() - 0.6309297535714575).abs() < 1e-12);
        assert_eq!(ndcg_user(&r, &[]), None);
    }
}
