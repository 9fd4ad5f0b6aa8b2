//! Gradient subspace distance between datasets, its differentially private
//! variant, and gradient-embedding private training.

pub mod data;
pub mod error;
pub mod gep;
pub mod gsd;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod privacy;
pub mod synth;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type MatrixF32 = linalg::Matrix<f32>;
pub type Subspace = linalg::Subspace<f64>;
pub type ModelParams = models::ModelParams<f64>;
pub type Batch = models::Batch<f64>;
