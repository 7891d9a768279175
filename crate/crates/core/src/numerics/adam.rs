use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Bias-corrected adaptive-moment optimizer state over an ordered set of
/// parameter arrays ("slots").
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub(crate) m: Vec<Vec<T>>,
    pub(crate) v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(slot_lengths: &[usize], lr: T) -> Self {
        Self::with_constants(slot_lengths, lr, T::of(DEFAULT_BETA1), T::of(DEFAULT_BETA2), T::of(DEFAULT_EPS))
    }

    pub fn with_constants(slot_lengths: &[usize], lr: T, beta1: T, beta2: T, eps: T) -> Self {
        Self {
            step: 0,
            lr,
            beta1,
            beta2,
            eps,
            m: slot_lengths.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: slot_lengths.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn slot_lengths(&self) -> Vec<usize> {
        self.m.iter().map(Vec::len).collect()
    }

    pub fn first_moments(&self) -> &[Vec<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<T>] {
        &self.v
    }

    /// Applies one update. Parameters are left untouched if any gradient is
    /// non-finite or the shapes disagree.
    pub fn step(&mut self, params: Vec<&mut [T]>, grads: Vec<&[T]>) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim(format!(
                "optimizer has {} slots, got {} parameter and {} gradient arrays",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (slot, (p, g)) in params.iter().zip(&grads).enumerate() {
            if p.len() != self.m[slot].len() || g.len() != self.m[slot].len() {
                return Err(Error::dim(format!("optimizer slot {slot} has mismatched length")));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("gradient in optimizer slot {slot}")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let bc1 = one - self.beta1.powi(t);
        let bc2 = one - self.beta2.powi(t);
        for (slot, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = self.beta1 * m[j] + (one - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (one - self.beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
