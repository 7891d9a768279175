use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

pub const EMBEDDING_INIT_STD: f64 = 1e-2;

/// User and item factors. Rows hold the vectors: `users.row(u)` is `w_u`,
/// `items.row(i)` is `h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<T> {
    pub users: DenseMatrix<T>,
    /// Absent for strictly coupled models, whose item vectors come from content.
    pub items: Option<DenseMatrix<T>>,
}

impl<T: Scalar> Embeddings<T> {
    pub fn zeros(num_users: usize, num_items: Option<usize>, k: usize) -> Self {
        Self {
            users: DenseMatrix::zeros(num_users, k),
            items: num_items.map(|i| DenseMatrix::zeros(i, k)),
        }
    }

    pub fn k(&self) -> usize {
        self.users.cols()
    }

    pub fn num_users(&self) -> usize {
        self.users.rows()
    }

    pub fn w(&self, user: usize) -> &[T] {
        self.users.row(user)
    }

    pub fn h(&self, item: usize) -> Option<&[T]> {
        self.items.as_ref().map(|h| h.row(item))
    }

    pub fn is_finite(&self) -> bool {
        self.users.is_finite() && self.items.as_ref().is_none_or(DenseMatrix::is_finite)
    }
}

pub(crate) fn normal_matrix<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> DenseMatrix<T> {
    let dist = Normal::new(0.0, std).expect("finite positive std");
    DenseMatrix::from_fn(rows, cols, |_, _| T::of(dist.sample(rng)))
}
