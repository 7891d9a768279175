use crate::error::{Error, Result};
use crate::eval::metrics::mean_std;
use crate::eval::EvalResult;

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub folds: Vec<EvalResult>,
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
}

/// Runs `run_fold` on every fold and summarizes the per-fold means.
pub fn cross_validate(num_folds: usize, mut run_fold: impl FnMut(usize) -> Result<EvalResult>) -> Result<CvSummary> {
    if num_folds < 2 {
        return Err(Error::config("cross-validation needs at least two folds"));
    }
    let folds = (0..num_folds).map(&mut run_fold).collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = folds.iter().map(|f| f.mean).collect();
    let (mean, std) = mean_std(&means);
    Ok(CvSummary { folds, mean, std })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub lambda_w: f64,
    pub lambda_h: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// In grid order: `lambda_w` outer, `lambda_h` inner.
    pub rows: Vec<GridRow>,
    pub best: GridRow,
}

fn key(score: f64) -> f64 {
    if score.is_nan() {
        f64::NEG_INFINITY
    } else {
        score
    }
}

/// Exhaustive search maximizing `score`; ties go to the larger `lambda_w`,
/// then the larger `lambda_h`.
pub fn grid_search(
    lambda_w: &[f64],
    lambda_h: &[f64],
    mut score: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<GridResult> {
    if lambda_w.is_empty() || lambda_h.is_empty() {
        return Err(Error::config("hyperparameter grids must be non-empty"));
    }
    let mut rows = Vec::with_capacity(lambda_w.len() * lambda_h.len());
    for &lw in lambda_w {
        for &lh in lambda_h {
            rows.push(GridRow {
                lambda_w: lw,
                lambda_h: lh,
                score: score(lw, lh)?,
            });
        }
    }
    let best = rows
        .iter()
        .max_by(|a, b| {
            key(a.score)
                .total_cmp(&key(b.score))
                .then(a.lambda_w.total_cmp(&b.lambda_w))
                .then(a.lambda_h.total_cmp(&b.lambda_h))
        })
        .cloned()
        .expect("non-empty grid");
    Ok(GridResult { rows, best })
}
