use rand::Rng;

use crate::error::{Error, Result};
use crate::models::{Combination, InteractionConfig, InteractionKind};
use crate::numerics::{Activation, DenseMatrix, Layer, Mlp, MlpGrads};
use crate::scalar::{dot, Scalar};

/// Widths of the hidden tower layers: `floor(k_prime / 2^(q-1))` for
/// `q = 1..=hidden_layers`, clamped at 1. The flag reports whether clamping happened.
pub fn tower_widths(k_prime: usize, hidden_layers: usize) -> (Vec<usize>, bool) {
    let mut clamped = false;
    let widths = (0..hidden_layers)
        .map(|q| {
            let w = if q >= usize::BITS as usize { 0 } else { k_prime >> q };
            if w == 0 {
                clamped = true;
                1
            } else {
                w
            }
        })
        .collect();
    (widths, clamped)
}

/// Joins a user and an item vector: elementwise product, or `[w; h]`.
pub fn combine<T: Scalar>(w: &[T], h: &[T], mode: Combination) -> Result<Vec<T>> {
    if w.len() != h.len() {
        return Err(Error::dim(format!("cannot combine vectors of length {} and {}", w.len(), h.len())));
    }
    Ok(match mode {
        Combination::Multiplication => w.iter().zip(h).map(|(a, b)| *a * *b).collect(),
        Combination::Concatenation => w.iter().chain(h).copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum InteractionModel<T> {
    DotProduct,
    Deep { config: InteractionConfig, net: Mlp<T> },
}

/// Score together with its gradients with respect to both inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrad<T> {
    pub score: T,
    pub grad_w: Vec<T>,
    pub grad_h: Vec<T>,
}

impl<T: Scalar> InteractionModel<T> {
    /// Builds the interaction for embedding size `k`. Tower layers get the
    /// fan-in uniform init; the bias-free output neuron starts at all ones.
    pub fn init<R: Rng + ?Sized>(config: &InteractionConfig, k: usize, rng: &mut R) -> Result<Self> {
        if config.kind == InteractionKind::DotProduct {
            return Ok(Self::DotProduct);
        }
        if !matches!(config.output_activation, Activation::Sigmoid | Activation::Identity) {
            return Err(Error::config("tower output activation must be sigmoid or identity"));
        }
        let k_prime = match config.combination {
            Combination::Multiplication => k,
            Combination::Concatenation => 2 * k,
        };
        let (widths, clamped) = tower_widths(k_prime, config.hidden_layers);
        if clamped {
            log::warn!(
                "tower of {} hidden layers over width {k_prime} bottoms out; widths clamped to 1: {widths:?}",
                config.hidden_layers
            );
        }
        let mut layers = Vec::with_capacity(widths.len() + 1);
        let mut fan_in = k_prime;
        for &w in &widths {
            layers.push(Layer::lecun_uniform(fan_in, w, true, Activation::Relu, rng));
            fan_in = w;
        }
        layers.push(Layer::new(
            DenseMatrix::from_fn(1, fan_in, |_, _| T::one()),
            None,
            config.output_activation,
        )?);
        Ok(Self::Deep {
            config: *config,
            net: Mlp::new(layers)?,
        })
    }

    pub fn is_deep(&self) -> bool {
        matches!(self, Self::Deep { .. })
    }

    pub fn net(&self) -> Option<&Mlp<T>> {
        match self {
            Self::Deep { net, .. } => Some(net),
            Self::DotProduct => None,
        }
    }

    pub fn net_mut(&mut self) -> Option<&mut Mlp<T>> {
        match self {
            Self::Deep { net, .. } => Some(net),
            Self::DotProduct => None,
        }
    }

    pub fn output_trainable(&self) -> bool {
        match self {
            Self::Deep { config, .. } => config.train_output,
            Self::DotProduct => false,
        }
    }

    pub fn score(&self, w: &[T], h: &[T]) -> T {
        match self {
            Self::DotProduct => dot(w, h),
            Self::Deep { config, net } => {
                let v = combine(w, h, config.combination).expect("embedding lengths agree");
                net.predict(&v).expect("tower input width matches")[0]
            }
        }
    }

    /// Evaluates the score, asks `upstream` for dL/dscore, and backpropagates it.
    /// Tower parameter gradients are accumulated into `net_grads` when given.
    pub fn score_backward(
        &self,
        w: &[T],
        h: &[T],
        upstream: impl FnOnce(T) -> T,
        net_grads: Option<&mut MlpGrads<T>>,
    ) -> Result<ScoreGrad<T>> {
        match self {
            Self::DotProduct => {
                let score = dot(w, h);
                let g = upstream(score);
                Ok(ScoreGrad {
                    score,
                    grad_w: h.iter().map(|x| g * *x).collect(),
                    grad_h: w.iter().map(|x| g * *x).collect(),
                })
            }
            Self::Deep { config, net } => {
                let v = combine(w, h, config.combination)?;
                let cache = net.forward(&v)?;
                let score = cache.output()[0];
                let g = upstream(score);
                let grad_v = match net_grads {
                    Some(grads) => net.backward_into(&cache, &[g], grads)?,
                    None => net.backward(&cache, &[g])?.1,
                };
                let k = w.len();
                let (grad_w, grad_h) = match config.combination {
                    Combination::Multiplication => (
                        grad_v.iter().zip(h).map(|(a, b)| *a * *b).collect(),
                        grad_v.iter().zip(w).map(|(a, b)| *a * *b).collect(),
                    ),
                    Combination::Concatenation => (grad_v[..k].to_vec(), grad_v[k..].to_vec()),
                };
                Ok(ScoreGrad { score, grad_w, grad_h })
            }
        }
    }
}
