use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{solve_spd, DenseMatrix};
use crate::scalar::{axpy, Scalar};
use crate::training::{Observation, TrainSet};

/// Minimizer of `Σ_i c_i (r_i − wᵀv_i)² + λ‖w‖²` where `v_i` is row `i` of
/// `vectors`: `w = (Σ c_i v_i v_iᵀ + λI)⁻¹ Σ c_i r_i v_i`.
pub fn als_update_w<T: Scalar>(vectors: &DenseMatrix<T>, r: &[T], c: &[T], lambda: T) -> Result<Vec<T>> {
    ridge_update(vectors, r, c, lambda, None)
}

/// Minimizer of `Σ_u c_u (r_u − w_uᵀh)² + λ‖h − prior‖²` where `w_u` is row
/// `u` of `users`.
pub fn als_update_h<T: Scalar>(users: &DenseMatrix<T>, r: &[T], c: &[T], lambda: T, prior: &[T]) -> Result<Vec<T>> {
    ridge_update(users, r, c, lambda, Some(prior))
}

fn ridge_update<T: Scalar>(
    rows: &DenseMatrix<T>,
    r: &[T],
    c: &[T],
    lambda: T,
    prior: Option<&[T]>,
) -> Result<Vec<T>> {
    let (n, k) = rows.shape();
    if r.len() != n || c.len() != n || prior.is_some_and(|p| p.len() != k) {
        return Err(Error::dim(format!("ridge update over {n} rows of width {k} got mismatched inputs")));
    }
    if !(lambda > T::zero()) {
        return Err(Error::config("ridge penalty must be positive"));
    }
    let mut a = DenseMatrix::zeros(k, k);
    let mut b = vec![T::zero(); k];
    for j in 0..n {
        let v = rows.row(j);
        add_outer(&mut a, c[j], v);
        axpy(c[j] * r[j], v, &mut b);
    }
    for d in 0..k {
        a[(d, d)] += lambda;
    }
    if let Some(p) = prior {
        axpy(lambda, p, &mut b);
    }
    solve_spd(&a, &b)
}

fn add_outer<T: Scalar>(a: &mut DenseMatrix<T>, scale: T, v: &[T]) {
    let k = v.len();
    for p in 0..k {
        let sp = scale * v[p];
        let row = a.row_mut(p);
        for q in 0..k {
            row[q] += sp * v[q];
        }
    }
}

/// `Σ_j v_j v_jᵀ` over the listed rows.
fn gram<T: Scalar>(rows: &DenseMatrix<T>, which: impl Iterator<Item = usize>) -> DenseMatrix<T> {
    let k = rows.cols();
    let mut g = DenseMatrix::zeros(k, k);
    for j in which {
        add_outer(&mut g, T::one(), rows.row(j));
    }
    g
}

/// Solves one row using the shared Gram matrix of all candidates plus the
/// `(c − 1)` corrections of the observed entries. Exact because unobserved
/// entries have `c = 1` and `r = 0`.
fn sparse_row<T: Scalar>(
    gram: &DenseMatrix<T>,
    rows: &DenseMatrix<T>,
    obs: &[Observation<T>],
    lambda: T,
    prior: Option<&[T]>,
) -> Result<Vec<T>> {
    let k = rows.cols();
    let mut a = gram.clone();
    let mut b = vec![T::zero(); k];
    for o in obs {
        let v = rows.row(o.index);
        add_outer(&mut a, o.c - T::one(), v);
        axpy(o.c * o.r, v, &mut b);
    }
    for d in 0..k {
        a[(d, d)] += lambda;
    }
    if let Some(p) = prior {
        axpy(lambda, p, &mut b);
    }
    solve_spd(&a, &b)
}

/// Exact update of every user row against fixed item vectors (rows of
/// `item_vectors`, indexed by item; only active items enter).
pub fn als_sweep_users<T: Scalar>(
    users: &mut DenseMatrix<T>,
    item_vectors: &DenseMatrix<T>,
    set: &TrainSet<T>,
    lambda_w: T,
) -> Result<()> {
    if !(lambda_w > T::zero()) {
        return Err(Error::config("lambda_w must be positive for alternating least squares"));
    }
    let g = gram(item_vectors, set.active_items().iter().copied());
    let solved: Vec<Vec<T>> = (0..set.num_users())
        .into_par_iter()
        .map(|u| sparse_row(&g, item_vectors, set.user_row(u), lambda_w, None))
        .collect::<Result<_>>()?;
    for (u, w) in solved.into_iter().enumerate() {
        users.row_mut(u).copy_from_slice(&w);
    }
    Ok(())
}

/// Exact update of every active item row against fixed user vectors, shrinking
/// towards `priors` (row per item) or towards zero.
pub fn als_sweep_items<T: Scalar>(
    items: &mut DenseMatrix<T>,
    users: &DenseMatrix<T>,
    set: &TrainSet<T>,
    lambda_h: T,
    priors: Option<&DenseMatrix<T>>,
) -> Result<()> {
    if !(lambda_h > T::zero()) {
        return Err(Error::config("lambda_h must be positive for alternating least squares"));
    }
    let g = gram(users, 0..users.rows());
    let solved: Vec<Vec<T>> = set
        .active_items()
        .par_iter()
        .map(|&i| sparse_row(&g, users, set.item_column(i), lambda_h, priors.map(|p| p.row(i))))
        .collect::<Result<_>>()?;
    for (&i, h) in set.active_items().iter().zip(solved) {
        items.row_mut(i).copy_from_slice(&h);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_normal_equation() {
        let h = DenseMatrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let w = als_update_w(&h, &[1.0, 0.0], &[2.0, 1.0], 1.0).unwrap();
        assert!((w[0] - 0.5f64).abs() < 1e-15);
    }

    #[test]
    fn zero_users_collapse_to_prior() {
        let w = DenseMatrix::<f64>::zeros(3, 2);
        let h = als_update_h(&w, &[1.0, 0.0, 1.0], &[3.0, 1.0, 2.0], 0.7, &[0.25, -1.5]).unwrap();
        assert!((h[0] - 0.25).abs() < 1e-15 && (h[1] + 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_penalty() {
        let h = DenseMatrix::<f64>::zeros(2, 1);
        assert!(als_update_w(&h, &[0.0, 0.0], &[1.0, 1.0], 0.0).is_err());
    }
}
