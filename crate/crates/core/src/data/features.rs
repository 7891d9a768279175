use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Per-item content feature vectors (`I × L`) with standardization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    features: DenseMatrix<f64>,
    means: Vec<f64>,
    stds: Vec<f64>,
    standardized: bool,
}

impl FeatureTable {
    pub fn new(features: DenseMatrix<f64>) -> Result<Self> {
        if !features.is_finite() {
            return Err(Error::NonFinite("feature table".into()));
        }
        let l = features.cols();
        Ok(Self {
            features,
            means: vec![0.0; l],
            stds: vec![1.0; l],
            standardized: false,
        })
    }

    pub fn num_items(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix<f64> {
        &self.features
    }

    pub fn row(&self, item: usize) -> &[f64] {
        self.features.row(item)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Applies externally computed statistics, e.g. those stored with a model.
    pub fn apply_standardization(&self, means: &[f64], stds: &[f64]) -> Result<Self> {
        if means.len() != self.dim() || stds.len() != self.dim() {
            return Err(Error::dim("standardization statistics do not match feature width"));
        }
        if let Some(d) = stds.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::ConstantFeature(d));
        }
        let mut features = self.features.clone();
        for r in 0..features.rows() {
            for (c, v) in features.row_mut(r).iter_mut().enumerate() {
                *v = (*v - means[c]) / stds[c];
            }
        }
        Ok(Self {
            features,
            means: means.to_vec(),
            stds: stds.to_vec(),
            standardized: true,
        })
    }

    pub fn write_tsv(&self, mut w: impl Write, item_names: &[String]) -> Result<()> {
        for (i, name) in item_names.iter().enumerate() {
            write!(w, "{name}")?;
            for v in self.row(i) {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Zero-mean, unit-variance transform with statistics taken over
/// `training_items` only (population variance) and applied to every item.
pub fn standardize_features(table: &FeatureTable, training_items: &[usize]) -> Result<FeatureTable> {
    if training_items.is_empty() {
        return Err(Error::config("standardization needs at least one training item"));
    }
    let l = table.dim();
    let n = training_items.len() as f64;
    let mut means = vec![0.0; l];
    for &i in training_items {
        for (m, v) in means.iter_mut().zip(table.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; l];
    for &i in training_items {
        for ((s, v), m) in vars.iter_mut().zip(table.row(i)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds: Vec<f64> = vars.iter().map(|s| (s / n).sqrt()).collect();
    for (d, (&s, &m)) in stds.iter().zip(&means).enumerate() {
        if !(s > 1e-12 * (1.0 + m.abs())) {
            return Err(Error::ConstantFeature(d));
        }
    }
    table.apply_standardization(&means, &stds)
}

/// Reads `item<TAB>v1<TAB>...<TAB>vL` rows and aligns them with `item_names`.
/// Rows for unknown items are ignored; a missing row is an error.
pub fn load_features(path: impl AsRef<Path>, item_names: &[String]) -> Result<FeatureTable> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let index: HashMap<&str, usize> = item_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; item_names.len()];
    let mut width: Option<usize> = None;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
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
        let mut fields = trimmed.split_whitespace();
        let name = fields.next().unwrap();
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(lineno, format!("`{f}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(parse_err(lineno, "no feature values".into()));
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_err(lineno, format!("expected {w} values, found {}", values.len())))
            }
            _ => {}
        }
        if let Some(&i) = index.get(name) {
            rows[i] = Some(values);
        }
    }
    let l = width.unwrap_or(0);
    let mut flat = Vec::with_capacity(item_names.len() * l);
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Some(r) => flat.extend(r),
            None => return Err(Error::MissingFeatures(item_names[i].clone())),
        }
    }
    FeatureTable::new(DenseMatrix::from_vec(item_names.len(), l, flat)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_case() {
        let t = FeatureTable::new(DenseMatrix::from_vec(3, 1, vec![1.0, 3.0, 5.0]).unwrap()).unwrap();
        let s = standardize_features(&t, &[0, 1]).unwrap();
        assert_eq!(s.means(), &[2.0]);
        assert_eq!(s.stds(), &[1.0]);
        assert_eq!(s.matrix().as_slice(), &[-1.0, 1.0, 3.0]);
        assert!(s.is_standardized());
    }

    #[test]
    fn idempotent_on_standardized_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = FeatureTable::new(DenseMatrix::from_fn(6, 3, |_, _| rng.random_range(-4.0..9.0))).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let once = standardize_features(&t, &all).unwrap();
        let twice = standardize_features(&once, &all).unwrap();
        for (a, b) in once.matrix().as_slice().iter().zip(twice.matrix().as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = FeatureTable::new(DenseMatrix::from_fn(5, 4, |_, _| rng.random_range(-10.0..10.0))).unwrap();
        let train = [0, 2, 3, 4];
        let s = standardize_features(&t, &train).unwrap();
        for c in 0..4 {
            let col: Vec<f64> = train.iter().map(|&r| t.matrix()[(r, c)]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!((s.means()[c] - mean).abs() < 1e-10);
            assert!((s.stds()[c] - var.sqrt()).abs() < 1e-10);
            let z: Vec<f64> = train.iter().map(|&r| s.matrix()[(r, c)]).collect();
            let zm = z.iter().sum::<f64>() / 4.0;
            let zv = z.iter().map(|v| (v - zm).powi(2)).sum::<f64>() / 4.0;
            assert!(zm.abs() < 1e-6 && (zv - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_dimension_named() {
        let t = FeatureTable::new(DenseMatrix::from_vec(2, 2, vec![1.0, 5.0, 2.0, 5.0]).unwrap()).unwrap();
        assert!(matches!(standardize_features(&t, &[0, 1]), Err(Error::ConstantFeature(1))));
    }

    #[test]
    fn load_aligns_and_reports_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.tsv");
        std::fs::write(&p, "b\t1\t2\nzz\t0\t0\na\t3\t4\n").unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let t = load_features(&p, &names).unwrap();
        assert_eq!(t.matrix().as_slice(), &[3.0, 4.0, 1.0, 2.0]);
        let names = vec!["a".to_string(), "c".to_string()];
        assert!(matches!(load_features(&p, &names), Err(Error::MissingFeatures(n)) if n == "c"));
        std::fs::write(&p, "a\t1\t2\nb\t1\n").unwrap();
        assert!(matches!(load_features(&p, &names), Err(Error::Parse { line: 2, .. })));
    }
}
