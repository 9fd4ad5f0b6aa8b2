//! Dense kernels: orthonormalization, Jacobi SVD and eigensolver, spectral
//! norm, principal angles and the projection metric.
//!
//! Everything here is generic over [`Scalar`](crate::Scalar) and pure.

mod angles;
mod eigen;
pub mod io;
mod matrix;
mod qr;
mod spectral;
mod subspace;
mod svd;

pub use angles::{principal_angles, projection_metric, PrincipalAngles};
pub use eigen::{relative_asymmetry, symmetric_eigen, SymmetricEigen};
pub use matrix::{axpy, dot, norm2, Matrix};
pub use qr::orthonormalize;
pub(crate) use qr::orthonormalize_completing;
pub use spectral::spectral_norm;
pub use subspace::Subspace;
pub use svd::{singular_values, svd, top_k_svd, SvdResult};
