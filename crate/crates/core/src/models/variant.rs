use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Signal;
use crate::error::{Error, Result};
use crate::numerics::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "wmf")]
    Wmf,
    #[serde(rename = "dcb")]
    Dcb,
    #[serde(rename = "mf-hybrid")]
    MfHybrid,
    #[serde(rename = "mf-uni")]
    MfUni,
    #[serde(rename = "ncacf")]
    Ncacf,
    #[serde(rename = "ncf")]
    Ncf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Content network acts as a prior on a free item embedding.
    Relaxed,
    /// Item embedding is the content network output.
    Strict,
    /// No content branch.
    ContentFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionKind {
    DotProduct,
    Deep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combination {
    Multiplication,
    Concatenation,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(Self::$variant),)+
                    other => Err(Error::config(format!(
                        "unknown {} `{other}`", stringify!($ty).to_lowercase()
                    ))),
                }
            }
        }
    };
}

text_enum!(Family { Wmf => "wmf", Dcb => "dcb", MfHybrid => "mf-hybrid", MfUni => "mf-uni", Ncacf => "ncacf", Ncf => "ncf" });
text_enum!(Coupling { Relaxed => "relaxed", Strict => "strict", ContentFree => "content-free" });
text_enum!(InteractionKind { DotProduct => "dot-product", Deep => "deep" });
text_enum!(Combination { Multiplication => "multiplication", Concatenation => "concatenation" });

/// Shape of the user/item interaction function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionConfig {
    pub kind: InteractionKind,
    pub combination: Combination,
    /// Number of hidden tower layers (deep kind only).
    pub hidden_layers: usize,
    /// Sigmoid normally; identity only to exercise the dot-product reduction.
    pub output_activation: Activation,
    /// When false the output weights stay at their all-ones initialization.
    pub train_output: bool,
}

impl InteractionConfig {
    pub fn dot_product() -> Self {
        Self {
            kind: InteractionKind::DotProduct,
            combination: Combination::Multiplication,
            hidden_layers: 0,
            output_activation: Activation::Identity,
            train_output: false,
        }
    }

    pub fn deep(combination: Combination, hidden_layers: usize) -> Self {
        Self {
            kind: InteractionKind::Deep,
            combination,
            hidden_layers,
            output_activation: Activation::Sigmoid,
            train_output: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub family: Family,
    pub coupling: Coupling,
    pub interaction: InteractionConfig,
}

impl ModelVariant {
    pub fn new(family: Family, coupling: Coupling, interaction: InteractionConfig) -> Result<Self> {
        let v = Self {
            family,
            coupling,
            interaction,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn wmf() -> Self {
        Self::new(Family::Wmf, Coupling::ContentFree, InteractionConfig::dot_product()).unwrap()
    }

    /// Dot-product variant of a linear family (DCB, MF-Hybrid, MF-Uni).
    pub fn linear(family: Family, coupling: Coupling) -> Result<Self> {
        Self::new(family, coupling, InteractionConfig::dot_product())
    }

    pub fn ncacf(coupling: Coupling, combination: Combination, hidden_layers: usize) -> Result<Self> {
        Self::new(Family::Ncacf, coupling, InteractionConfig::deep(combination, hidden_layers))
    }

    pub fn ncf(combination: Combination, hidden_layers: usize) -> Self {
        Self::new(
            Family::Ncf,
            Coupling::ContentFree,
            InteractionConfig::deep(combination, hidden_layers),
        )
        .unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        use Family::*;
        let content_free = self.coupling == Coupling::ContentFree;
        match self.family {
            Wmf | Ncf if !content_free => {
                return Err(Error::config(format!("{} has no content branch; coupling must be content-free", self.family)))
            }
            Dcb | MfHybrid | MfUni | Ncacf if content_free => {
                return Err(Error::config(format!("{} needs relaxed or strict coupling", self.family)))
            }
            _ => {}
        }
        let dot = self.interaction.kind == InteractionKind::DotProduct;
        match self.family {
            Wmf | Dcb | MfHybrid | MfUni if !dot => {
                Err(Error::config(format!("{} uses the dot-product interaction", self.family)))
            }
            Ncacf | Ncf if dot => Err(Error::config(format!("{} needs a deep interaction", self.family))),
            _ => Ok(()),
        }
    }

    pub fn has_content(&self) -> bool {
        self.coupling != Coupling::ContentFree
    }

    /// Whether a free item embedding matrix is stored.
    pub fn has_item_embeddings(&self) -> bool {
        self.coupling != Coupling::Strict || self.family == Family::Dcb
    }

    pub fn can_cold_start(&self) -> bool {
        self.has_content()
    }

    /// Conventional display name, e.g. `MF-Hybrid-Relaxed`.
    pub fn name(&self) -> String {
        let base = match self.family {
            Family::Wmf => "WMF",
            Family::Dcb => "DCB",
            Family::MfHybrid => "MF-Hybrid",
            Family::MfUni => "MF-Uni",
            Family::Ncacf => "NCACF",
            Family::Ncf => "NCF",
        };
        let mut name = match self.coupling {
            Coupling::Relaxed => format!("{base}-Relaxed"),
            Coupling::Strict => format!("{base}-Strict"),
            Coupling::ContentFree => base.to_string(),
        };
        if self.interaction.kind == InteractionKind::Deep {
            let comb = match self.interaction.combination {
                Combination::Multiplication => "mult",
                Combination::Concatenation => "concat",
            };
            name.push_str(&format!("-{comb}-Q{}", self.interaction.hidden_layers));
        }
        name
    }
}

/// Regularization, signal and schedule settings shared by all trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lambda_w: f64,
    pub lambda_h: f64,
    pub signal: Signal,
    /// Adam learning rate.
    pub eta: f64,
    /// Items per gradient batch.
    pub batch_items: usize,
    /// Outer iterations of the alternating methods.
    pub n_iter: usize,
    /// Gradient epochs per outer iteration.
    pub n_gd: usize,
    /// Epoch budget of gradient-only methods (the fine-tuning phase for NCACF/NCF).
    pub max_epochs: usize,
    /// Dot-product pretraining epochs before the deep interaction is attached.
    pub pretrain_epochs: usize,
    /// Validation frequency, in epochs or outer iterations.
    pub eval_every: usize,
    /// Use the whole item set as a single batch.
    pub full_batch: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            lambda_w: 0.1,
            lambda_h: 0.1,
            signal: Signal::default(),
            eta: 1e-3,
            batch_items: 32,
            n_iter: 10,
            n_gd: 1,
            max_epochs: 50,
            pretrain_epochs: 20,
            eval_every: 5,
            full_batch: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("lambda_w", self.lambda_w),
            ("lambda_h", self.lambda_h),
            ("alpha", self.signal.alpha),
            ("eta", self.eta),
        ];
        for (name, v) in reals {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be a non-negative number")));
            }
        }
        if !(self.signal.epsilon > 0.0) || !(self.signal.tau >= 1.0) {
            return Err(Error::config("epsilon must be positive and tau at least 1"));
        }
        if self.batch_items == 0 || self.eval_every == 0 {
            return Err(Error::config("batch_items and eval_every must be at least 1"));
        }
        Ok(())
    }

    /// Flat `key=value` rendering used in checkpoint headers.
    pub fn to_fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda_w", format!("{:e}", self.lambda_w)),
            ("lambda_h", format!("{:e}", self.lambda_h)),
            ("tau", format!("{:e}", self.signal.tau)),
            ("alpha", format!("{:e}", self.signal.alpha)),
            ("epsilon", format!("{:e}", self.signal.epsilon)),
            ("eta", format!("{:e}", self.eta)),
            ("batch_items", self.batch_items.to_string()),
            ("n_iter", self.n_iter.to_string()),
            ("n_gd", self.n_gd.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("pretrain_epochs", self.pretrain_epochs.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("full_batch", self.full_batch.to_string()),
        ]
    }

    pub fn from_fields<'a>(fields: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut h = Self::default();
        for (k, v) in fields {
            let real = || v.parse::<f64>().map_err(|_| Error::config(format!("bad value for {k}: `{v}`")));
            let count = || v.parse::<usize>().map_err(|_| Error::config(format!("bad value for {k}: `{v}`")));
            match k {
                "lambda_w" => h.lambda_w = real()?,
                "lambda_h" => h.lambda_h = real()?,
                "tau" => h.signal.tau = real()?,
                "alpha" => h.signal.alpha = real()?,
                "epsilon" => h.signal.epsilon = real()?,
                "eta" => h.eta = real()?,
                "batch_items" => h.batch_items = count()?,
                "n_iter" => h.n_iter = count()?,
                "n_gd" => h.n_gd = count()?,
                "max_epochs" => h.max_epochs = count()?,
                "pretrain_epochs" => h.pretrain_epochs = count()?,
                "eval_every" => h.eval_every = count()?,
                "full_batch" => h.full_batch = v == "true",
                other => return Err(Error::config(format!("unknown hyperparameter `{other}`"))),
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_coupling_rules() {
        assert!(ModelVariant::new(Family::Wmf, Coupling::Relaxed, InteractionConfig::dot_product()).is_err());
        assert!(ModelVariant::linear(Family::MfUni, Coupling::ContentFree).is_err());
        assert!(ModelVariant::new(
            Family::MfHybrid,
            Coupling::Relaxed,
            InteractionConfig::deep(Combination::Concatenation, 1)
        )
        .is_err());
        assert!(ModelVariant::ncacf(Coupling::Strict, Combination::Concatenation, 2).is_ok());
        assert!(!ModelVariant::ncf(Combination::Multiplication, 1).can_cold_start());
        assert_eq!(ModelVariant::linear(Family::MfHybrid, Coupling::Relaxed).unwrap().name(), "MF-Hybrid-Relaxed");
    }

    #[test]
    fn text_round_trip() {
        for f in [Family::Wmf, Family::Dcb, Family::MfHybrid, Family::MfUni, Family::Ncacf, Family::Ncf] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("bogus".parse::<Coupling>().is_err());
    }

    #[test]
    fn hyperparams_fields_round_trip() {
        let h = Hyperparams {
            lambda_w: 0.37,
            eta: 3e-4,
            full_batch: true,
            ..Default::default()
        };
        let f = h.to_fields();
        let back = Hyperparams::from_fields(f.iter().map(|(k, v)| (*k, v.as_str()))).unwrap();
        assert_eq!(back, h);
    }
}
