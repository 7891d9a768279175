//! Experiment configuration: a TOML file layered over a profile's defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncacf_core::data::{Signal, SplitMode, SyntheticConfig};
use ncacf_core::eval::RunSpec;
use ncacf_core::models::{Combination, Coupling, Family, Hyperparams, InteractionConfig, InteractionKind, ModelVariant};
use ncacf_core::numerics::Activation;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

/// Environment variable naming the root that relative output directories live under.
pub const OUTPUT_ROOT_VAR: &str = "NCACF_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Desk,
    PaperFaithful,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::PaperFaithful => "paper-faithful",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper-faithful" => Ok(Profile::PaperFaithful),
            other => Err(format!("unknown profile `{other}` (expected desk or paper-faithful)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Raw `user item count` file read by `prepare`.
    pub triplets: String,
    /// Raw `item v1 .. vL` file; empty for content-free experiments.
    pub features: String,
    /// Prepared dataset directory.
    pub dataset: String,
    pub min_user_songs: usize,
    pub min_item_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: Family,
    pub coupling: Coupling,
    pub interaction: InteractionKind,
    pub combination: Combination,
    /// Hidden tower layers `Q`.
    pub hidden_layers: usize,
    pub output_activation: Activation,
    pub train_output: bool,
    pub k: usize,
    pub hidden_width: usize,
    pub content_layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSection {
    pub lambda_w: f64,
    pub lambda_h: f64,
    pub tau: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub batch_items: usize,
    pub n_iter: usize,
    pub n_gd: usize,
    pub max_epochs: usize,
    pub pretrain_epochs: usize,
    pub eval_every: usize,
    pub full_batch: bool,
    pub early_stopping: bool,
    /// Validations without improvement before stopping; 0 disables.
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub mode: SplitMode,
    pub num_folds: usize,
    pub val_fraction: f64,
    /// Test folds to run; empty means all.
    pub folds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub top_k: usize,
    pub random_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lambda_w: Vec<f64>,
    pub lambda_h: Vec<f64>,
    /// Fold whose validation bucket scores the grid.
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub num_users: usize,
    pub num_items: usize,
    pub k_true: usize,
    pub num_features: usize,
    pub noise: f64,
    pub density: f64,
    pub sharpness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: String,
    pub profile: Profile,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub data: DataSection,
    pub model: ModelSection,
    pub hyper: HyperSection,
    pub split: SplitSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub synth: SynthSection,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn profile_defaults(profile: Profile) -> Self {
        let hyper = Hyperparams::default();
        let synth = SyntheticConfig::default();
        let mut cfg = Self {
            seed: 0,
            output_dir: "runs/default".into(),
            profile,
            threads: 0,
            data: DataSection {
                triplets: String::new(),
                features: String::new(),
                dataset: "data".into(),
                min_user_songs: 20,
                min_item_users: 50,
            },
            model: ModelSection {
                family: Family::Ncacf,
                coupling: Coupling::Relaxed,
                interaction: InteractionKind::Deep,
                combination: Combination::Multiplication,
                hidden_layers: 1,
                output_activation: Activation::Sigmoid,
                train_output: true,
                k: 32,
                hidden_width: 64,
                content_layers: 3,
            },
            hyper: HyperSection {
                lambda_w: hyper.lambda_w,
                lambda_h: hyper.lambda_h,
                tau: hyper.signal.tau,
                alpha: hyper.signal.alpha,
                epsilon: hyper.signal.epsilon,
                eta: hyper.eta,
                batch_items: hyper.batch_items,
                n_iter: hyper.n_iter,
                n_gd: hyper.n_gd,
                max_epochs: hyper.max_epochs,
                pretrain_epochs: hyper.pretrain_epochs,
                eval_every: hyper.eval_every,
                full_batch: false,
                early_stopping: true,
                patience: 0,
            },
            split: SplitSection {
                mode: SplitMode::Cold,
                num_folds: 10,
                val_fraction: 0.2,
                folds: vec![0],
            },
            eval: EvalSection {
                top_k: 10,
                random_trials: 100,
            },
            sweep: SweepSection {
                lambda_w: vec![0.01, 0.1, 1.0, 10.0],
                lambda_h: vec![0.01, 0.1, 1.0, 10.0],
                fold: 0,
            },
            synth: SynthSection {
                num_users: synth.num_users,
                num_items: synth.num_items,
                k_true: synth.k_true,
                num_features: synth.num_features,
                noise: synth.noise,
                density: synth.density,
                sharpness: synth.sharpness,
            },
            base_dir: PathBuf::from("."),
        };
        if profile == Profile::PaperFaithful {
            cfg.model.k = 128;
            cfg.model.hidden_width = 1024;
            cfg.hyper.eta = 1e-4;
            cfg.hyper.batch_items = 128;
            cfg.hyper.max_epochs = 150;
            cfg.hyper.pretrain_epochs = 100;
            cfg.eval.top_k = 50;
            cfg.split.folds = Vec::new();
        }
        cfg
    }

    /// Parses `text` over the defaults of the profile chosen by `profile`,
    /// else by the file, else `desk`.
    pub fn parse(text: &str, profile: Option<Profile>, base_dir: &Path) -> CliResult<Self> {
        let user: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let file_profile = match user.get("profile") {
            Some(Value::String(s)) => Some(s.parse::<Profile>().map_err(CliError::Config)?),
            Some(_) => return Err(CliError::Config("`profile` must be a string".into())),
            None => None,
        };
        let profile = profile.or(file_profile).unwrap_or(Profile::Desk);
        let defaults = Self::profile_defaults(profile);
        let mut merged = Table::try_from(&defaults).map_err(|e| CliError::Config(e.to_string()))?;
        for (key, value) in user {
            match (merged.get_mut(&key), value) {
                (Some(Value::Table(base)), Value::Table(over)) => {
                    for (k, v) in over {
                        if !base.contains_key(&k) {
                            return Err(CliError::Config(format!("unknown key `{key}.{k}`")));
                        }
                        base.insert(k, v);
                    }
                }
                (Some(Value::Table(_)), _) => return Err(CliError::Config(format!("`{key}` must be a section"))),
                (Some(slot), v) => *slot = v,
                (None, _) => return Err(CliError::Config(format!("unknown key `{key}`"))),
            }
        }
        merged.insert("profile".into(), Value::String(profile.to_string()));
        let mut cfg: Self = merged.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::parse(&text, profile, &std::path::absolute(base)?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.variant()?;
        self.hyperparams().validate()?;
        if self.model.k == 0 || self.model.hidden_width == 0 || self.model.content_layers == 0 {
            return Err(CliError::Config("model dimensions must be positive".into()));
        }
        if self.eval.top_k == 0 {
            return Err(CliError::Config("eval.top_k must be at least 1".into()));
        }
        if self.split.num_folds < 2 {
            return Err(CliError::Config("split.num_folds must be at least 2".into()));
        }
        if let Some(f) = self.split.folds.iter().find(|&&f| f >= self.split.num_folds) {
            return Err(CliError::Config(format!("split.folds entry {f} out of range")));
        }
        if self.sweep.fold >= self.split.num_folds {
            return Err(CliError::Config("sweep.fold out of range".into()));
        }
        Ok(())
    }

    pub fn variant(&self) -> CliResult<ModelVariant> {
        let m = &self.model;
        let interaction = match m.interaction {
            InteractionKind::DotProduct => InteractionConfig::dot_product(),
            InteractionKind::Deep => InteractionConfig {
                output_activation: m.output_activation,
                train_output: m.train_output,
                ..InteractionConfig::deep(m.combination, m.hidden_layers)
            },
        };
        Ok(ModelVariant::new(m.family, m.coupling, interaction)?)
    }

    pub fn hyperparams(&self) -> Hyperparams {
        let h = &self.hyper;
        Hyperparams {
            lambda_w: h.lambda_w,
            lambda_h: h.lambda_h,
            signal: Signal {
                tau: h.tau,
                alpha: h.alpha,
                epsilon: h.epsilon,
            },
            eta: h.eta,
            batch_items: h.batch_items,
            n_iter: h.n_iter,
            n_gd: h.n_gd,
            max_epochs: h.max_epochs,
            pretrain_epochs: h.pretrain_epochs,
            eval_every: h.eval_every,
            full_batch: h.full_batch,
        }
    }

    pub fn run_spec(&self) -> CliResult<RunSpec> {
        Ok(RunSpec {
            variant: self.variant()?,
            k: self.model.k,
            hidden_width: self.model.hidden_width,
            content_layers: self.model.content_layers,
            hyper: self.hyperparams(),
            seed: self.seed,
            top_k: self.eval.top_k,
            early_stopping: self.hyper.early_stopping,
            patience: (self.hyper.patience > 0).then_some(self.hyper.patience),
        })
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        let s = &self.synth;
        SyntheticConfig {
            num_users: s.num_users,
            num_items: s.num_items,
            k_true: s.k_true,
            num_features: s.num_features,
            noise: s.noise,
            density: s.density,
            seed: self.seed,
            tau: self.hyper.tau.ceil() as u32,
            sharpness: s.sharpness,
        }
    }

    pub fn folds(&self) -> Vec<usize> {
        if self.split.folds.is_empty() {
            (0..self.split.num_folds).collect()
        } else {
            self.split.folds.clone()
        }
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.resolve(&self.data.dataset)
    }

    pub fn triplets_path(&self) -> CliResult<PathBuf> {
        if self.data.triplets.is_empty() {
            return Err(CliError::Config("data.triplets is not set".into()));
        }
        Ok(self.resolve(&self.data.triplets))
    }

    pub fn features_path(&self) -> Option<PathBuf> {
        (!self.data.features.is_empty()).then(|| self.resolve(&self.data.features))
    }

    /// Relative output directories live under the output-root variable when
    /// it is set, otherwise next to the config file.
    pub fn output_dir(&self) -> PathBuf {
        let p = Path::new(&self.output_dir);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(p),
            _ => self.base_dir.join(p),
        }
    }

    /// Copy with every path made absolute, suitable for writing elsewhere.
    pub fn absolutized(&self) -> Self {
        let abs = |p: PathBuf| std::path::absolute(&p).unwrap_or(p).to_string_lossy().into_owned();
        let mut out = self.clone();
        if !self.data.triplets.is_empty() {
            out.data.triplets = abs(self.resolve(&self.data.triplets));
        }
        if !self.data.features.is_empty() {
            out.data.features = abs(self.resolve(&self.data.features));
        }
        out.data.dataset = abs(self.dataset_dir());
        out.output_dir = abs(self.output_dir());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_profile_defaults() {
        let cfg = ExperimentConfig::parse("", None, Path::new(".")).unwrap();
        assert_eq!(cfg, ExperimentConfig::profile_defaults(Profile::Desk));
        let cfg = ExperimentConfig::parse("profile = \"paper-faithful\"", None, Path::new(".")).unwrap();
        assert_eq!(cfg.model.k, 128);
        assert_eq!(cfg.eval.top_k, 50);
        let cfg = ExperimentConfig::parse("profile = \"paper-faithful\"", Some(Profile::Desk), Path::new(".")).unwrap();
        assert_eq!(cfg.profile, Profile::Desk);
    }

    #[test]
    fn sections_override_single_keys() {
        let text = "seed = 4\n[model]\nfamily = \"wmf\"\ncoupling = \"content-free\"\ninteraction = \"dot-product\"\n[hyper]\nlambda_w = 3.5\n";
        let cfg = ExperimentConfig::parse(text, None, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.hyper.lambda_w, 3.5);
        assert_eq!(cfg.hyper.lambda_h, 0.1);
        assert_eq!(cfg.variant().unwrap(), ModelVariant::wmf());
    }

    #[test]
    fn unknown_keys_and_bad_variants_are_rejected() {
        for text in [
            "bogus = 1",
            "[model]\nsize = 3",
            "[model]\nfamily = \"wmf\"",
            "[hyper]\nbatch_items = 0",
            "[split]\nnum_folds = 1",
            "model = 3",
        ] {
            assert!(ExperimentConfig::parse(text, None, Path::new(".")).is_err(), "{text}");
        }
    }

    #[test]
    fn round_trip() {
        let text = "seed = 9\n[sweep]\nlambda_w = [0.5, 2.0]\n[split]\nmode = \"warm\"\nfolds = []\n";
        let cfg = ExperimentConfig::parse(text, None, Path::new(".")).unwrap();
        let back = ExperimentConfig::parse(&cfg.to_toml().unwrap(), None, Path::new(".")).unwrap();
        assert_eq!(cfg, back);
    }
}
