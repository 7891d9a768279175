//! Dense linear algebra, feed-forward networks with exact reverse-mode
//! gradients, the Adam optimizer and a finite-difference gradient oracle.

mod adam;
pub mod blob;
mod finite_diff;
mod matrix;
mod mlp;
mod solve;

pub use adam::{AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS};
pub use finite_diff::finite_diff_grad;
pub use matrix::DenseMatrix;
pub use mlp::{sigmoid, Activation, ForwardCache, Layer, LayerGrad, Mlp, MlpGrads};
pub use solve::{solve_spd, Cholesky};
