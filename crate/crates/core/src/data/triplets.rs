use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub user: usize,
    pub item: usize,
    pub count: f64,
}

/// Observed (user, item, playcount) records over dense id spaces.
///
/// Entries are kept sorted by `(user, item)`; original identifiers are
/// retained for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTriplets {
    entries: Vec<Triplet>,
    user_names: Vec<String>,
    item_names: Vec<String>,
}

impl InteractionTriplets {
    /// Builds a dataset with synthetic names `0..U` and `0..I`.
    pub fn new(entries: Vec<Triplet>, num_users: usize, num_items: usize) -> Result<Self> {
        Self::with_names(
            entries,
            (0..num_users).map(|u| u.to_string()).collect(),
            (0..num_items).map(|i| i.to_string()).collect(),
        )
    }

    pub fn with_names(mut entries: Vec<Triplet>, user_names: Vec<String>, item_names: Vec<String>) -> Result<Self> {
        let (nu, ni) = (user_names.len(), item_names.len());
        for t in &entries {
            if t.user >= nu || t.item >= ni {
                return Err(Error::dim(format!(
                    "triplet ({}, {}) outside {nu} users x {ni} items",
                    t.user, t.item
                )));
            }
            if !(t.count > 0.0) || !t.count.is_finite() {
                return Err(Error::dim(format!(
                    "playcount {} for ({}, {}) is not positive",
                    t.count, t.user, t.item
                )));
            }
        }
        entries.sort_by_key(|t| (t.user, t.item));
        if let Some(w) = entries.windows(2).find(|w| (w[0].user, w[0].item) == (w[1].user, w[1].item)) {
            return Err(Error::dim(format!(
                "duplicate interaction ({}, {})",
                user_names[w[0].user], item_names[w[0].item]
            )));
        }
        Ok(Self {
            entries,
            user_names,
            item_names,
        })
    }

    pub fn entries(&self) -> &[Triplet] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.user_names.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_names.len()
    }

    pub fn user_names(&self) -> &[String] {
        &self.user_names
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    /// Index of the entry for `(user, item)`, if observed.
    pub fn find(&self, user: usize, item: usize) -> Option<usize> {
        self.entries
            .binary_search_by_key(&(user, item), |t| (t.user, t.item))
            .ok()
    }

    /// Number of entries per item.
    pub fn item_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_items()];
        for t in &self.entries {
            deg[t.item] += 1;
        }
        deg
    }

    pub fn write_tsv(&self, mut w: impl Write) -> Result<()> {
        for t in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.user_names[t.user], self.item_names[t.item], t.count
            )?;
        }
        Ok(())
    }
}

/// Reads `user<TAB>item<TAB>count` records, re-indexing ids densely in order
/// of first appearance. Blank lines and `#` comments are skipped.
pub fn load_triplets(path: impl AsRef<Path>) -> Result<InteractionTriplets> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_triplets(BufReader::new(file), path)
}

pub fn parse_triplets(reader: impl Read, source: &Path) -> Result<InteractionTriplets> {
    let reader = BufReader::new(reader);
    let mut users: HashMap<String, usize> = HashMap::new();
    let mut items: HashMap<String, usize> = HashMap::new();
    let mut user_names = Vec::new();
    let mut item_names = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut entries = Vec::new();

    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(source),
        line,
        message,
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected 3 fields, found {}", fields.len())));
        }
        let count: u64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("count `{}` is not a non-negative integer", fields[2])))?;
        if count == 0 {
            return Err(parse_err(lineno, "count must be positive".into()));
        }
        let u = *users.entry(fields[0].to_string()).or_insert_with(|| {
            user_names.push(fields[0].to_string());
            user_names.len() - 1
        });
        let i = *items.entry(fields[1].to_string()).or_insert_with(|| {
            item_names.push(fields[1].to_string());
            item_names.len() - 1
        });
        if let Some(&first) = seen.get(&(u, i)) {
            return Err(Error::DuplicateInteraction {
                user: fields[0].to_string(),
                item: fields[1].to_string(),
                first,
                second: lineno,
            });
        }
        seen.insert((u, i), lineno);
        entries.push(Triplet {
            user: u,
            item: i,
            count: count as f64,
        });
    }
    InteractionTriplets::with_names(entries, user_names, item_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<InteractionTriplets> {
        parse_triplets(text.as_bytes(), Path::new("mem"))
    }

    #[test]
    fn reindexes_densely() {
        let t = parse("a\tb\t3\na\tc\t1\n").unwrap();
        assert_eq!((t.num_users(), t.num_items()), (1, 2));
        let e: Vec<_> = t.entries().iter().map(|t| (t.user, t.item, t.count)).collect();
        assert_eq!(e, vec![(0, 0, 3.0), (0, 1, 1.0)]);
        assert_eq!(t.item_names(), &["b", "c"]);
    }

    #[test]
    fn empty_and_comments() {
        let t = parse("").unwrap();
        assert_eq!((t.num_users(), t.num_items(), t.len()), (0, 0, 0));
        let t = parse("# header\n\nx y 2\n").unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn duplicate_reports_both_lines() {
        match parse("a b 3\na b 3\n") {
            Err(Error::DuplicateInteraction { first, second, .. }) => assert_eq!((first, second), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("a b 3\na c x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("a b\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("a b 0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn tsv_round_trip() {
        let t = parse("u1\ti1\t4\nu2\ti1\t9\nu1\ti2\t1\n").unwrap();
        let mut buf = Vec::new();
        t.write_tsv(&mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap().len(), 3);
    }
}
