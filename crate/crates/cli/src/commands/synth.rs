use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ncacf_core::data::{generate_synthetic, PlantedModel};
use ncacf_core::numerics::DenseMatrix;

use crate::commands::prepare::prepare_from;
use crate::config::ExperimentConfig;
use crate::dataset;
use crate::error::{CliError, CliResult};

/// Generates a planted dataset, writes the raw files under `<dataset>/raw`
/// and prepares it like any other dataset. Activity filtering uses the
/// configured thresholds.
pub fn synth(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let ds = generate_synthetic(&cfg.synthetic())?;
    let out = cfg.dataset_dir();
    let raw = out.join("raw");
    std::fs::create_dir_all(&raw)?;
    let triplets = raw.join(dataset::TRIPLETS);
    let features = raw.join(dataset::FEATURES);
    let mut w = BufWriter::new(File::create(&triplets)?);
    ds.triplets.write_tsv(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(&features)?);
    ds.features.write_tsv(&mut w, ds.triplets.item_names())?;
    w.flush()?;
    write_planted(&out.join(dataset::PLANTED), &ds.planted, ds.triplets.user_names(), ds.triplets.item_names())?;
    prepare_from(cfg, &triplets, Some(&features), &out)
}

/// Ground truth keyed by user and item names.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSidecar {
    pub median_affinity: f64,
    pub users: Vec<(String, Vec<f64>)>,
    pub items: Vec<(String, Vec<f64>)>,
    /// Rows of the feature-to-embedding map.
    pub map: Vec<Vec<f64>>,
}

fn write_rows(w: &mut impl Write, tag: &str, names: Option<&[String]>, m: &DenseMatrix<f64>) -> CliResult<()> {
    for r in 0..m.rows() {
        let name = names.map_or_else(|| r.to_string(), |n| n[r].clone());
        write!(w, "{tag}\t{name}")?;
        for v in m.row(r) {
            write!(w, "\t{v:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_planted(path: &Path, p: &PlantedModel, users: &[String], items: &[String]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "median\t-\t{:?}", p.median_affinity)?;
    write_rows(&mut w, "user", Some(users), &p.users)?;
    write_rows(&mut w, "item", Some(items), &p.items)?;
    write_rows(&mut w, "map", None, &p.map)?;
    w.flush()?;
    Ok(())
}

pub fn load_planted(path: &Path) -> CliResult<PlantedSidecar> {
    let mut out = PlantedSidecar {
        median_affinity: f64::NAN,
        users: Vec::new(),
        items: Vec::new(),
        map: Vec::new(),
    };
    let f = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let mut fields = line.split('\t');
        let (Some(tag), Some(name)) = (fields.next(), fields.next()) else {
            return Err(CliError::Data(format!("{}:{}: malformed line", path.display(), n + 1)));
        };
        let values = fields
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        match tag {
            "median" => out.median_affinity = values.first().copied().unwrap_or(f64::NAN),
            "user" => out.users.push((name.to_string(), values)),
            "item" => out.items.push((name.to_string(), values)),
            "map" => out.map.push(values),
            other => return Err(CliError::Data(format!("{}:{}: unknown tag `{other}`", path.display(), n + 1))),
        }
    }
    Ok(out)
}
