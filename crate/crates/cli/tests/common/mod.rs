#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ncacf"));
    c.env("RUST_LOG", "warn").env_remove("NCACF_OUTPUT_ROOT");
    c
}

/// Runs the binary with `--config <cfg>` followed by `args`.
pub fn run(cfg: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(cfg).args(args).output().expect("binary runs")
}

pub fn run_ok(cfg: &Path, args: &[&str]) -> Output {
    let out = run(cfg, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// A small synthetic dataset under `dir/data`.
pub const SYNTH: &str = r#"
seed = 3
[data]
dataset = "data"
min_user_songs = 1
min_item_users = 1
[split]
num_folds = 3
folds = [0]
[synth]
num_users = 120
num_items = 80
num_features = 6
density = 0.08
"#;

pub fn synth_dataset(dir: &Path) {
    let cfg = write(dir, "synth.toml", SYNTH);
    run_ok(&cfg, &["synth"]);
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Configuration sharing the synthetic dataset, with `extra` layered on top.
pub fn config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let mut base: toml::Table = SYNTH.parse().unwrap();
    merge(&mut base, extra.parse().unwrap());
    write(dir, name, &toml::to_string(&base).unwrap())
}

pub const HYBRID: &str = r#"
output_dir = "runs/hybrid"
[model]
family = "mf-hybrid"
coupling = "relaxed"
interaction = "dot-product"
k = 4
content_layers = 1
[hyper]
lambda_w = 10.0
lambda_h = 100.0
eta = 0.01
n_iter = 3
n_gd = 2
"#;

pub fn files_in(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let bytes = std::fs::read(&p).unwrap();
                out.push((p, bytes));
            }
        }
    }
    out.sort();
    out
}
