use crate::data::{InteractionTriplets, Triplet};
use crate::error::{Error, Result};

/// Repeatedly drops users with fewer than `min_user_items` items and items
/// with fewer than `min_item_users` users until both constraints hold, then
/// re-densifies ids (relative order preserved).
pub fn filter_activity(
    triplets: &InteractionTriplets,
    min_user_items: usize,
    min_item_users: usize,
) -> Result<InteractionTriplets> {
    let (nu, ni) = (triplets.num_users(), triplets.num_items());
    let mut user_alive = vec![true; nu];
    let mut item_alive = vec![true; ni];
    loop {
        let mut user_deg = vec![0usize; nu];
        let mut item_deg = vec![0usize; ni];
        for t in triplets.entries() {
            if user_alive[t.user] && item_alive[t.item] {
                user_deg[t.user] += 1;
                item_deg[t.item] += 1;
            }
        }
        let mut changed = false;
        for u in 0..nu {
            if user_alive[u] && user_deg[u] < min_user_items {
                user_alive[u] = false;
                changed = true;
            }
        }
        for i in 0..ni {
            if item_alive[i] && item_deg[i] < min_item_users {
                item_alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let remap = |alive: &[bool]| -> Vec<Option<usize>> {
        let mut next = 0;
        alive
            .iter()
            .map(|&a| {
                a.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let user_map = remap(&user_alive);
    let item_map = remap(&item_alive);
    let entries: Vec<Triplet> = triplets
        .entries()
        .iter()
        .filter_map(|t| {
            Some(Triplet {
                user: user_map[t.user]?,
                item: item_map[t.item]?,
                count: t.count,
            })
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let keep = |names: &[String], alive: &[bool]| -> Vec<String> {
        names
            .iter()
            .zip(alive)
            .filter(|(_, &a)| a)
            .map(|(n, _)| n.clone())
            .collect()
    };
    InteractionTriplets::with_names(
        entries,
        keep(triplets.user_names(), &user_alive),
        keep(triplets.item_names(), &item_alive),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn build(cells: &[(usize, usize)], nu: usize, ni: usize) -> InteractionTriplets {
        let e = cells
            .iter()
            .map(|&(u, i)| Triplet { user: u, item: i, count: 1.0 })
            .collect();
        InteractionTriplets::new(e, nu, ni).unwrap()
    }

    /// Removes one offending row or column at a time until nothing changes.
    fn one_at_a_time(cells: &[(usize, usize)], mu: usize, mi: usize) -> Vec<(usize, usize)> {
        let mut cur = cells.to_vec();
        loop {
            let bad_user = cur
                .iter()
                .map(|c| c.0)
                .find(|&u| cur.iter().filter(|c| c.0 == u).count() < mu);
            if let Some(u) = bad_user {
                cur.retain(|c| c.0 != u);
                continue;
            }
            let bad_item = cur
                .iter()
                .map(|c| c.1)
                .find(|&i| cur.iter().filter(|c| c.1 == i).count() < mi);
            if let Some(i) = bad_item {
                cur.retain(|c| c.1 != i);
                continue;
            }
            return cur;
        }
    }

    fn surviving(t: &InteractionTriplets) -> Vec<(String, String)> {
        let mut v: Vec<_> = t
            .entries()
            .iter()
            .map(|e| (t.user_names()[e.user].clone(), t.item_names()[e.item].clone()))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn compliant_input_unchanged() {
        let t = build(&[(0, 0), (0, 1), (1, 0), (1, 1)], 2, 2);
        assert_eq!(filter_activity(&t, 2, 2).unwrap(), t);
    }

    #[test]
    fn chain_cascade_matches_repeated_pass_oracle() {
        // item 2 has one user; dropping it leaves user 2 with a single item,
        // which in turn removes item 1's support from user 2.
        let cells = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 1), (2, 2)];
        let t = build(&cells, 3, 3);
        let out = filter_activity(&t, 2, 2).unwrap();
        let mut oracle: Vec<(String, String)> = one_at_a_time(&cells, 2, 2)
            .into_iter()
            .map(|(u, i)| (u.to_string(), i.to_string()))
            .collect();
        oracle.sort();
        assert_eq!(surviving(&out), oracle);
        assert_eq!((out.num_users(), out.num_items()), (2, 2));
    }

    #[test]
    fn minimal_thresholds_drop_only_empty_ids() {
        let t = build(&[(0, 0), (2, 2)], 3, 4);
        let out = filter_activity(&t, 1, 1).unwrap();
        assert_eq!((out.num_users(), out.num_items(), out.len()), (2, 2, 2));
        assert_eq!(out.user_names(), &["0", "2"]);
    }

    #[test]
    fn empty_result_is_an_error() {
        let t = build(&[(0, 0)], 1, 1);
        assert!(matches!(filter_activity(&t, 2, 1), Err(Error::EmptyDataset)));
    }

    proptest! {
        #[test]
        fn output_is_a_fixpoint(cells in proptest::collection::btree_set((0usize..8, 0usize..8), 1..40), mu in 1usize..4, mi in 1usize..4) {
            let cells: Vec<_> = cells.into_iter().collect();
            let t = build(&cells, 8, 8);
            match filter_activity(&t, mu, mi) {
                Ok(out) => {
                    prop_assert_eq!(filter_activity(&out, mu, mi).unwrap(), out.clone());
                    let mut oracle: Vec<(String, String)> = one_at_a_time(&cells, mu, mi)
                        .into_iter().map(|(u, i)| (u.to_string(), i.to_string())).collect();
                    oracle.sort();
                    prop_assert_eq!(surviving(&out), oracle);
                }
                Err(Error::EmptyDataset) => prop_assert!(one_at_a_time(&cells, mu, mi).is_empty()),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
