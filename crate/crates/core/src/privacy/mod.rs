//! Differential-privacy building blocks: row clipping, Bingham sampling,
//! private top eigenvector, private GSD and Gaussian noise calibration.
//!
//! The private path is pure ε-DP; `delta` is carried for reporting and for the
//! Gaussian calibration used in training.
//!
//! Every sampler takes an explicit seed and draws from a `ChaCha8Rng` seeded
//! with it. Outputs are reproducible within a build of this crate.

mod bingham;
mod calibration;
mod clip;
mod dppca;

pub use bingham::{bingham_sample, von_mises, BinghamSampler, SampleMethod, GIBBS_SWEEPS, REJECTION_BUDGET};
pub use calibration::{gep_noise_calibration, gep_noise_scale, required_sample_size, CloseApprox, NoiseCalibration, PrivacyParams};
pub use clip::{clip_in_place, clip_rows};
pub use dppca::{
    dp_gsd, dp_gsd_from_gradients, dp_pca, dp_pca_sampler, dp_pca_with_method, DpGsdReport, DpPcaDiagnostics,
    PrivacyBlock, MECHANISM,
};
