use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Activation, Layer, Mlp};
use crate::scalar::Scalar;

/// Content network mapping item features to the embedding space.
/// Hidden layers use ReLU, the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentExtractor<T> {
    pub net: Mlp<T>,
}

impl<T: Scalar> ContentExtractor<T> {
    /// `layers` counts every affine layer, the output layer included.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        hidden_width: usize,
        layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if layers == 0 || input_dim == 0 || output_dim == 0 || (layers > 1 && hidden_width == 0) {
            return Err(Error::config("content network needs positive sizes and at least one layer"));
        }
        let mut stack = Vec::with_capacity(layers);
        let mut fan_in = input_dim;
        for _ in 1..layers {
            stack.push(Layer::lecun_uniform(fan_in, hidden_width, true, Activation::Relu, rng));
            fan_in = hidden_width;
        }
        stack.push(Layer::lecun_uniform(fan_in, output_dim, true, Activation::Identity, rng));
        Ok(Self { net: Mlp::new(stack)? })
    }

    pub fn from_net(net: Mlp<T>) -> Result<Self> {
        let last = net.layers().last().expect("non-empty network");
        if last.activation != Activation::Identity {
            return Err(Error::dim("content network must end in a linear layer"));
        }
        Ok(Self { net })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn embed(&self, features: &[T]) -> Result<Vec<T>> {
        self.net.predict(features)
    }
}
