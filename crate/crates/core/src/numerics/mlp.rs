use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            // subgradient at 0 is taken to be 0
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
            Activation::Sigmoid => a * (T::one() - a),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// One affine layer followed by an elementwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    /// `out × in`
    pub weights: DenseMatrix<T>,
    pub bias: Option<Vec<T>>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weights: DenseMatrix<T>, bias: Option<Vec<T>>, activation: Activation) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weights.rows() {
                return Err(Error::dim(format!(
                    "bias of length {} for {} outputs",
                    b.len(),
                    weights.rows()
                )));
            }
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Weights uniform on `±sqrt(3 / fan_in)` (unit-variance-preserving), biases zero.
    pub fn lecun_uniform<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        with_bias: bool,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = (3.0 / inputs.max(1) as f64).sqrt();
        let weights = DenseMatrix::from_fn(outputs, inputs, |_, _| T::of(rng.random_range(-bound..=bound)));
        Self {
            weights,
            bias: with_bias.then(|| vec![T::zero(); outputs]),
            activation,
        }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn pre_activation(&self, input: &[T]) -> Vec<T> {
        let mut z = self
            .weights
            .matvec(input)
            .expect("layer input width checked by caller");
        if let Some(b) = &self.bias {
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += *bi;
            }
        }
        z
    }
}

/// Parameters of a feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

/// Activations recorded by [`Mlp::forward`], consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    shapes: Vec<(usize, usize)>,
    /// input to each layer; `inputs[0]` is the network input
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    output: Vec<T>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn pre_activations(&self) -> &[Vec<T>] {
        &self.pre
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: DenseMatrix<T>,
    pub bias: Option<Vec<T>>,
}

/// Gradients mirroring the parameter layout of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<T> {
    pub layers: Vec<LayerGrad<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::dim("network needs at least one layer"));
        }
        for (idx, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::dim(format!(
                    "layer {idx} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    idx + 1,
                    pair[1].inputs()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter arrays in canonical order: for each layer, weights then bias.
    pub fn param_slices(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weights.as_slice());
            if let Some(b) = &l.bias {
                out.push(b.as_slice());
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            if let Some(b) = &mut l.bias {
                out.push(b.as_mut_slice());
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Output only, without recording a cache.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for layer in &self.layers {
            let mut z = layer.pre_activation(&x);
            for v in z.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            x = z;
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[T]) -> Result<ForwardCache<T>> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for layer in &self.layers {
            let z = layer.pre_activation(&x);
            let a: Vec<T> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut x, a));
            pre.push(z);
        }
        Ok(ForwardCache {
            shapes: self.shapes(),
            inputs,
            pre,
            output: x,
        })
    }

    /// Reverse pass: accumulates parameter gradients into `grads` and returns
    /// the gradient with respect to the network input.
    pub fn backward_into(
        &self,
        cache: &ForwardCache<T>,
        grad_output: &[T],
        grads: &mut MlpGrads<T>,
    ) -> Result<Vec<T>> {
        if cache.shapes != self.shapes() {
            return Err(Error::dim("forward cache does not match network shape"));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::dim("gradient bundle does not match network shape"));
        }
        if grad_output.len() != self.output_dim() {
            return Err(Error::dim(format!(
                "output gradient of length {} for {} outputs",
                grad_output.len(),
                self.output_dim()
            )));
        }
        let mut upstream = grad_output.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[idx];
            let a = if idx + 1 < self.layers.len() {
                &cache.inputs[idx + 1]
            } else {
                &cache.output
            };
            let delta: Vec<T> = upstream
                .iter()
                .zip(z.iter().zip(a))
                .map(|(&g, (&zi, &ai))| g * layer.activation.derivative(zi, ai))
                .collect();
            let input = &cache.inputs[idx];
            let g = &mut grads.layers[idx];
            for (r, &d) in delta.iter().enumerate() {
                if d == T::zero() {
                    continue;
                }
                crate::scalar::axpy(d, input, g.weights.row_mut(r));
            }
            if let Some(gb) = &mut g.bias {
                for (b, &d) in gb.iter_mut().zip(&delta) {
                    *b += d;
                }
            }
            upstream = layer.weights.matvec_transposed(&delta)?;
        }
        Ok(upstream)
    }

    /// Convenience wrapper returning a fresh gradient bundle.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_output: &[T]) -> Result<(MlpGrads<T>, Vec<T>)> {
        let mut grads = MlpGrads::zeros_like(self);
        let input_grad = self.backward_into(cache, grad_output, &mut grads)?;
        Ok((grads, input_grad))
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| l.weights.shape()).collect()
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::dim(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: DenseMatrix::zeros(l.outputs(), l.inputs()),
                    bias: l.bias.as_ref().map(|b| vec![T::zero(); b.len()]),
                })
                .collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weights.as_slice());
            if let Some(b) = &l.bias {
                out.push(b.as_slice());
            }
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            if let Some(b) = &mut l.bias {
                out.push(b.as_mut_slice());
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += *s;
            }
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        self.slices().concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_grad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_layer(n: usize, activation: Activation) -> Layer<f64> {
        Layer::new(DenseMatrix::identity(n), Some(vec![0.0; n]), activation).unwrap()
    }

    fn random_net(rng: &mut ChaCha8Rng, widths: &[usize], last: Activation) -> Mlp<f64> {
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { Activation::Relu };
                let mut l = Layer::lecun_uniform(widths[i], widths[i + 1], true, act, rng);
                for b in l.bias.as_mut().unwrap() {
                    *b = rng.random_range(-0.5..0.5);
                }
                l
            })
            .collect();
        Mlp::new(layers).unwrap()
    }

    fn set_flat(net: &mut Mlp<f64>, flat: &[f64]) {
        let mut off = 0;
        for s in net.param_slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
    }

    #[test]
    fn identity_and_relu_layers() {
        let net = Mlp::new(vec![identity_layer(2, Activation::Identity)]).unwrap();
        assert_eq!(net.predict(&[-1.0, 2.0]).unwrap(), vec![-1.0, 2.0]);
        let net = Mlp::new(vec![identity_layer(2, Activation::Relu)]).unwrap();
        assert_eq!(net.forward(&[-1.0, 2.0]).unwrap().output(), &[0.0, 2.0]);
    }

    #[test]
    fn forward_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_net(&mut rng, &[4, 5, 3], Activation::Sigmoid);
        let x = [0.3, -1.2, 0.7, 2.0];
        // neuron-by-neuron oracle
        let mut cur = x.to_vec();
        for layer in net.layers() {
            let mut next = Vec::new();
            for o in 0..layer.outputs() {
                let mut s = layer.bias.as_ref().unwrap()[o];
                for i in 0..layer.inputs() {
                    s += layer.weights[(o, i)] * cur[i];
                }
                next.push(match layer.activation {
                    Activation::Relu => if s > 0.0 { s } else { 0.0 },
                    Activation::Identity => s,
                    Activation::Sigmoid => 1.0 / (1.0 + (-s).exp()),
                });
            }
            cur = next;
        }
        for (a, b) in net.predict(&x).unwrap().iter().zip(&cur) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_layer_gradients() {
        let w = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let net = Mlp::new(vec![Layer::new(w.clone(), Some(vec![0.0; 2]), Activation::Identity).unwrap()]).unwrap();
        let x = [1.0, -1.0, 2.0];
        let g = [0.5, -2.0];
        let cache = net.forward(&x).unwrap();
        let (grads, input_grad) = net.backward(&cache, &g).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(grads.layers[0].weights[(r, c)], g[r] * x[c]);
            }
        }
        assert_eq!(grads.layers[0].bias.as_deref().unwrap(), &g);
        assert_eq!(input_grad, w.matvec_transposed(&g).unwrap());
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let w = DenseMatrix::from_vec(2, 2, vec![-1.0, 0.0, 0.0, -1.0]).unwrap();
        let net = Mlp::new(vec![Layer::new(w, None, Activation::Relu).unwrap()]).unwrap();
        let cache = net.forward(&[1.0, 2.0]).unwrap();
        let (grads, input_grad) = net.backward(&cache, &[1.0, 1.0]).unwrap();
        assert!(grads.flatten().iter().all(|&v| v == 0.0));
        assert!(input_grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_net(&mut rng, &[3, 4, 2], Activation::Identity);
        let b = random_net(&mut rng, &[3, 5, 2], Activation::Identity);
        let cache = a.forward(&[0.0, 1.0, 2.0]).unwrap();
        assert!(b.backward(&cache, &[1.0, 1.0]).is_err());
        assert!(a.forward(&[1.0]).is_err());
        let bad = Layer::lecun_uniform(3, 4, true, Activation::Relu, &mut rng);
        let bad2 = Layer::<f64>::lecun_uniform(5, 1, true, Activation::Relu, &mut rng);
        assert!(Mlp::new(vec![bad, bad2]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let depth = 1 + trial % 3;
            let mut widths = vec![1 + rng.random_range(0..6)];
            for _ in 0..depth {
                widths.push(1 + rng.random_range(0..16));
            }
            let last = [Activation::Identity, Activation::Sigmoid, Activation::Relu][trial % 3];
            let net = random_net(&mut rng, &widths, last);
            let x: Vec<f64> = (0..widths[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let probe: Vec<f64> = (0..net.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let loss = |n: &Mlp<f64>, input: &[f64]| -> f64 {
                n.predict(input).unwrap().iter().zip(&probe).map(|(a, b)| a * b).sum()
            };
            let cache = net.forward(&x).unwrap();
            let (grads, input_grad) = net.backward(&cache, &probe).unwrap();

            let flat: Vec<f64> = net.param_slices().concat();
            let numeric = finite_diff_grad(
                |p: &[f64]| {
                    let mut n = net.clone();
                    set_flat(&mut n, p);
                    loss(&n, &x)
                },
                &flat,
                1e-5,
            )
            .unwrap();
            for (a, n) in grads.flatten().iter().zip(&numeric) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                assert!(rel < 1e-4, "trial {trial}: analytic {a} numeric {n}");
            }
            let numeric_x = finite_diff_grad(|p: &[f64]| loss(&net, p), &x, 1e-5).unwrap();
            for (a, n) in input_grad.iter().zip(&numeric_x) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                assert!(rel < 1e-4, "trial {trial}: input analytic {a} numeric {n}");
            }
        }
    }

    #[test]
    fn forward_is_deterministic_and_ranges_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = random_net(&mut rng, &[3, 8, 4], Activation::Sigmoid);
        let x = [100.0, -100.0, 3.0];
        let a = net.predict(&x).unwrap();
        let b = net.predict(&x).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(a.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(sigmoid(-800.0f64) >= 0.0 && sigmoid(800.0f64) <= 1.0);
    }
}
