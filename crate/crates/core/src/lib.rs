//! Content-aware collaborative filtering for implicit feedback: weighted
//! matrix factorization, hybrid content models, and neural interaction towers.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod data;
pub mod error;
pub mod eval;
pub mod models;
pub mod numerics;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = numerics::DenseMatrix<f64>;
pub type Model = models::Model<f64>;
pub type Embeddings = models::Embeddings<f64>;
pub type Mlp = numerics::Mlp<f64>;
