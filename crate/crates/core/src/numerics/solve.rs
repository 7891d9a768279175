use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim(format!("cholesky of {}x{}", n, a.cols())));
        }
        let tol = T::of(1e-10).max(T::epsilon() * T::of(100.0));
        for i in 0..n {
            for j in 0..i {
                let (x, y) = (a[(i, j)], a[(j, i)]);
                if (x - y).abs() > tol * T::one().max(x.abs()) {
                    return Err(Error::dim(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut lower = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= lower[(j, k)] * lower[(j, k)];
            }
            if !(diag > T::zero()) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag.as_f64(),
                });
            }
            let d = diag.sqrt();
            lower[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)];
                }
                lower[(i, j)] = s / d;
            }
        }
        Ok(Self { lower })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lower.rows();
        if b.len() != n {
            return Err(Error::dim(format!("rhs of length {} for order {n}", b.len())));
        }
        let l = &self.lower;
        // L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        Ok(y)
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn solve_spd<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    Cholesky::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain Gaussian elimination with partial pivoting.
    fn eliminate(a: &DenseMatrix<f64>, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row = a.row(i).to_vec();
                row.push(b[i]);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
                .unwrap();
            m.swap(col, piv);
            for r in (col + 1)..n {
                let f = m[r][col] / m[col][col];
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = ((r + 1)..n).map(|c| m[r][c] * x[c]).sum();
            x[r] = (m[r][n] - s) / m[r][r];
        }
        x
    }

    fn random_ridge_system(rng: &mut ChaCha8Rng, k: usize) -> (DenseMatrix<f64>, Vec<f64>) {
        let g = DenseMatrix::from_fn(k + 2, k, |_, _| rng.random_range(-1.0..1.0));
        let mut a = g.transpose().matmul(&g).unwrap();
        for i in 0..k {
            a[(i, i)] += 1.0;
        }
        let b = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        (a, b)
    }

    #[test]
    fn identity_and_scaled_identity() {
        let x = solve_spd(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let mut a = DenseMatrix::identity(2);
        a[(0, 0)] = 2.0;
        a[(1, 1)] = 2.0;
        let x: Vec<f64> = solve_spd(&a, &[4.0, 6.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn matches_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = random_ridge_system(&mut rng, 5);
        let x = solve_spd(&a, &b).unwrap();
        let oracle = eliminate(&a, &b);
        for (u, v) in x.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-10, "{u} vs {v}");
        }
    }

    #[test]
    fn residual_bound_on_many_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let k = 1 + trial % 32;
            let (a, b) = random_ridge_system(&mut rng, k);
            let x = solve_spd(&a, &b).unwrap();
            let ax = a.matvec(&x).unwrap();
            let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= 1e-8 * (1.0 + bn), "k={k} residual {res}");
        }
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            solve_spd(&a, &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        let a = DenseMatrix::from_vec(2, 2, vec![2.0, 0.5, 0.0, 2.0]).unwrap();
        assert!(matches!(solve_spd(&a, &[1.0, 1.0]), Err(Error::Dimension(_))));
    }
}
