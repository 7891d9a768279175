use crate::data::InteractionTriplets;

/// Row (per-user) and column (per-item) views of a set of playcounts.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePlaycounts {
    num_users: usize,
    num_items: usize,
    by_user: Vec<Vec<(usize, f64)>>,
    by_item: Vec<Vec<(usize, f64)>>,
}

impl SparsePlaycounts {
    /// Builds the views from the triplets whose indices are listed in `subset`
    /// (all triplets when `None`).
    pub fn from_triplets(triplets: &InteractionTriplets, subset: Option<&[usize]>) -> Self {
        let (nu, ni) = (triplets.num_users(), triplets.num_items());
        let mut by_user = vec![Vec::new(); nu];
        let mut by_item = vec![Vec::new(); ni];
        let mut push = |idx: usize| {
            let t = triplets.entries()[idx];
            by_user[t.user].push((t.item, t.count));
            by_item[t.item].push((t.user, t.count));
        };
        match subset {
            Some(s) => s.iter().for_each(|&i| push(i)),
            None => (0..triplets.len()).for_each(push),
        }
        for row in by_user.iter_mut().chain(by_item.iter_mut()) {
            row.sort_by_key(|e| e.0);
        }
        Self {
            num_users: nu,
            num_items: ni,
            by_user,
            by_item,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn nnz(&self) -> usize {
        self.by_user.iter().map(Vec::len).sum()
    }

    /// `(item, playcount)` pairs of a user, ascending by item.
    pub fn user_row(&self, user: usize) -> &[(usize, f64)] {
        &self.by_user[user]
    }

    /// `(user, playcount)` pairs of an item, ascending by user.
    pub fn item_column(&self, item: usize) -> &[(usize, f64)] {
        &self.by_item[item]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Triplet;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn views_encode_the_same_multiset(cells in proptest::collection::btree_map((0usize..6, 0usize..5), 1u32..20, 0..25)) {
            let entries: Vec<Triplet> = cells.iter().map(|(&(u, i), &c)| Triplet { user: u, item: i, count: c as f64 }).collect();
            let t = InteractionTriplets::new(entries, 6, 5).unwrap();
            let s = SparsePlaycounts::from_triplets(&t, None);
            let mut from_users: Vec<(usize, usize, u64)> = (0..6)
                .flat_map(|u| s.user_row(u).iter().map(move |&(i, c)| (u, i, c as u64)))
                .collect();
            let mut from_items: Vec<(usize, usize, u64)> = (0..5)
                .flat_map(|i| s.item_column(i).iter().map(move |&(u, c)| (u, i, c as u64)))
                .collect();
            from_users.sort();
            from_items.sort();
            prop_assert_eq!(&from_users, &from_items);
            prop_assert_eq!(from_users.len(), t.len());
            for u in 0..6 {
                prop_assert!(s.user_row(u).windows(2).all(|w| w[0].0 < w[1].0));
            }
        }
    }
}
