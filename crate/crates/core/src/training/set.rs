use crate::data::{standardize_features, FeatureTable, FoldView, InteractionTriplets, Signal, SparsePlaycounts};
use crate::error::{Error, Result};
use crate::models::FeatureStats;
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

/// One observed entry: the other index, binarized preference and confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<T> {
    pub index: usize,
    pub r: T,
    pub c: T,
}

/// Training data in the form the estimators consume. Unobserved pairs are
/// implicit with `r = 0`, `c = 1`.
#[derive(Debug, Clone)]
pub struct TrainSet<T> {
    num_users: usize,
    num_items: usize,
    by_user: Vec<Vec<Observation<T>>>,
    by_item: Vec<Vec<Observation<T>>>,
    active_items: Vec<usize>,
    features: Option<DenseMatrix<T>>,
}

impl<T: Scalar> TrainSet<T> {
    /// `active_items` are the items the objective sums over; observations on
    /// other items are rejected. `features` (if any) covers every item.
    pub fn new(
        sparse: &SparsePlaycounts,
        signal: &Signal,
        active_items: Vec<usize>,
        features: Option<DenseMatrix<T>>,
    ) -> Result<Self> {
        let (nu, ni) = (sparse.num_users(), sparse.num_items());
        let mut active_items = active_items;
        active_items.sort_unstable();
        active_items.dedup();
        if active_items.is_empty() || active_items.last().is_some_and(|&i| i >= ni) {
            return Err(Error::dim("active item set is empty or out of range"));
        }
        let mut is_active = vec![false; ni];
        for &i in &active_items {
            is_active[i] = true;
        }
        if let Some(f) = &features {
            if f.rows() != ni {
                return Err(Error::dim(format!("{} feature rows for {ni} items", f.rows())));
            }
        }
        let obs = |index: usize, count: f64| Observation {
            index,
            r: signal.preference::<T>(count),
            c: signal.confidence::<T>(count),
        };
        let mut by_item = Vec::with_capacity(ni);
        for i in 0..ni {
            let col = sparse.item_column(i);
            if !is_active[i] && !col.is_empty() {
                return Err(Error::dim(format!("item {i} has training interactions but is not active")));
            }
            by_item.push(col.iter().map(|&(u, y)| obs(u, y)).collect());
        }
        let by_user = (0..nu)
            .map(|u| sparse.user_row(u).iter().map(|&(i, y)| obs(i, y)).collect())
            .collect();
        Ok(Self {
            num_users: nu,
            num_items: ni,
            by_user,
            by_item,
            active_items,
            features,
        })
    }

    /// Training set of one fold. Features are standardized with statistics of
    /// the fold's training items; those statistics are returned for the model.
    pub fn from_view(
        triplets: &InteractionTriplets,
        view: &FoldView,
        signal: &Signal,
        features: Option<&FeatureTable>,
    ) -> Result<(Self, Option<FeatureStats>)> {
        let sparse = SparsePlaycounts::from_triplets(triplets, Some(&view.train));
        let (feats, stats) = match features {
            Some(table) => {
                let std = standardize_features(table, &view.train_items)?;
                let stats = FeatureStats {
                    means: std.means().to_vec(),
                    stds: std.stds().to_vec(),
                };
                (Some(std.matrix().cast::<T>()), Some(stats))
            }
            None => (None, None),
        };
        Ok((Self::new(&sparse, signal, view.train_items.clone(), feats)?, stats))
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn active_items(&self) -> &[usize] {
        &self.active_items
    }

    pub fn user_row(&self, user: usize) -> &[Observation<T>] {
        &self.by_user[user]
    }

    pub fn item_column(&self, item: usize) -> &[Observation<T>] {
        &self.by_item[item]
    }

    pub fn features(&self) -> Option<&DenseMatrix<T>> {
        self.features.as_ref()
    }

    pub fn feature_row(&self, item: usize) -> Result<&[T]> {
        self.features
            .as_ref()
            .map(|f| f.row(item))
            .ok_or_else(|| Error::MissingFeatures("training set has no feature table".into()))
    }

    /// Dense preference and confidence vectors over all items for one user.
    pub fn dense_user(&self, user: usize) -> (Vec<T>, Vec<T>) {
        let mut r = vec![T::zero(); self.num_items];
        let mut c = vec![T::one(); self.num_items];
        for o in &self.by_user[user] {
            r[o.index] = o.r;
            c[o.index] = o.c;
        }
        (r, c)
    }

    /// Dense preference and confidence vectors over all users for one item.
    pub fn dense_item(&self, item: usize) -> (Vec<T>, Vec<T>) {
        let mut r = vec![T::zero(); self.num_users];
        let mut c = vec![T::one(); self.num_users];
        for o in &self.by_item[item] {
            r[o.index] = o.r;
            c[o.index] = o.c;
        }
        (r, c)
    }
}
