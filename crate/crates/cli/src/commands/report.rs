use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::commands::evaluate::SUMMARY;
use crate::commands::train::REPORT;
use crate::error::{CliError, CliResult};

pub const TABLE: &str = "comparison.tsv";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub variant: String,
    pub warm: Option<(f64, f64)>,
    pub cold: Option<(f64, f64)>,
}

fn parse_summary(path: &Path) -> CliResult<(String, String, f64, f64)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let line = text
        .lines()
        .nth(1)
        .ok_or_else(|| CliError::Data(format!("{}: no summary row", path.display())))?;
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() < 6 {
        return Err(CliError::Data(format!("{}: malformed summary row", path.display())));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Data(format!("{}: `{s}` is not a number", path.display())))
    };
    Ok((f[0].to_string(), f[1].to_string(), num(f[4])?, num(f[5])?))
}

/// Cross-variant table sorted by cold-start NDCG (descending, missing last)
/// plus per-fold training series copied under `series/`.
pub fn report(runs: &[PathBuf], out: &Path) -> CliResult<Vec<Row>> {
    if runs.is_empty() {
        return Err(CliError::Config("report needs at least one run directory".into()));
    }
    let mut rows: BTreeMap<String, Row> = BTreeMap::new();
    let series = out.join("series");
    std::fs::create_dir_all(&series)?;
    for run in runs {
        let (variant, setting, mean, std) = parse_summary(&run.join(SUMMARY))?;
        let row = rows.entry(variant.clone()).or_insert_with(|| Row {
            variant: variant.clone(),
            ..Default::default()
        });
        match setting.as_str() {
            "warm" => row.warm = Some((mean, std)),
            "cold" => row.cold = Some((mean, std)),
            other => return Err(CliError::Data(format!("unknown setting `{other}` in {}", run.display()))),
        }
        let mut folds: Vec<(usize, PathBuf)> = std::fs::read_dir(run)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                let fold = name.strip_prefix("fold")?.parse().ok()?;
                Some((fold, e.path()))
            })
            .collect();
        folds.sort();
        for (fold, dir) in folds {
            let src = dir.join(REPORT);
            if src.exists() {
                std::fs::copy(&src, series.join(format!("{variant}_{setting}_fold{fold}.tsv")))?;
            }
        }
    }
    let mut rows: Vec<Row> = rows.into_values().collect();
    let key = |r: &Row| r.cold.map_or(f64::NEG_INFINITY, |c| c.0);
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.variant.cmp(&b.variant)));
    let mut w = BufWriter::new(File::create(out.join(TABLE))?);
    writeln!(w, "variant\twarm_ndcg\twarm_std\tcold_ndcg\tcold_std")?;
    let cell = |v: Option<(f64, f64)>| v.map_or(("-".to_string(), "-".to_string()), |(m, s)| (format!("{m:.6}"), format!("{s:.6}")));
    for r in &rows {
        let (wm, ws) = cell(r.warm);
        let (cm, cs) = cell(r.cold);
        writeln!(w, "{}\t{wm}\t{ws}\t{cm}\t{cs}", r.variant)?;
    }
    w.flush()?;
    Ok(rows)
}
