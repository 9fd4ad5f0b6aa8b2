//! Principal angles and the projection metric between equal-dimension subspaces.

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::subspace::Subspace;
use super::svd::singular_values;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Principal angles `0 ≤ θ₁ ≤ … ≤ θ_k ≤ π/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrincipalAngles(pub Vec<f64>);

impl PrincipalAngles {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sqrt(Σ sin²θ)`; agrees with [`projection_metric`] up to rounding.
    pub fn projection_metric(&self) -> f64 {
        self.0.iter().map(|t| t.sin().powi(2)).sum::<f64>().sqrt()
    }
}

fn check_dims<T: Scalar>(v1: &Subspace<T>, v2: &Subspace<T>) -> Result<()> {
    if v1.ambient_dim() != v2.ambient_dim() || v1.dim() != v2.dim() {
        return Err(Error::DimMismatch(format!(
            "subspaces of shape {}x{} and {}x{}",
            v1.ambient_dim(),
            v1.dim(),
            v2.ambient_dim(),
            v2.dim()
        )));
    }
    Ok(())
}

/// Component of `V2` orthogonal to `span(V1)`: `V2 − V1·(V1ᵀV2)`.
///
/// Its singular values are the sines of the principal angles.
fn residual<T: Scalar>(v1: &Subspace<T>, v2: &Subspace<T>, cross: &Matrix<T>) -> Result<Matrix<T>> {
    v2.basis().sub(&v1.basis().matmul(cross)?)
}

/// Principal angles from the singular values of `V1ᵀV2` (cosines) and of the
/// orthogonal residual (sines).
///
/// Cosines and sines are clamped to `[0, 1]`. Angles below π/4 are taken from
/// the sine, the rest from the cosine, so neither end loses precision.
pub fn principal_angles<T: Scalar>(v1: &Subspace<T>, v2: &Subspace<T>) -> Result<PrincipalAngles> {
    check_dims(v1, v2)?;
    let cross = v1.basis().t_matmul(v2.basis())?;
    let cosines = singular_values(&cross)?;
    let mut sines = singular_values(&residual(v1, v2, &cross)?)?;
    sines.reverse();
    let half = T::lit(0.5);
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            let c = c.max(T::zero()).min(T::one());
            let s = s.max(T::zero()).min(T::one());
            let theta = if c * c >= half { s.asin() } else { c.acos() };
            theta.to_f64_lossy()
        })
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    Ok(PrincipalAngles(angles))
}

/// Projection metric `d = sqrt(Σ sin²θᵢ) ∈ [0, √k]`.
///
/// Evaluated as the Frobenius norm of the residual `V2 − V1·V1ᵀV2`, whose
/// squared singular values are exactly the `sin²θᵢ`.
pub fn projection_metric<T: Scalar>(v1: &Subspace<T>, v2: &Subspace<T>) -> Result<T> {
    check_dims(v1, v2)?;
    let cross = v1.basis().t_matmul(v2.basis())?;
    let d = residual(v1, v2, &cross)?.frobenius_norm();
    Ok(d.min(T::lit(v1.dim() as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn span(cols: &[Vec<f64>]) -> Subspace<f64> {
        Subspace::from_basis(Matrix::from_columns(cols[0].len(), cols)).unwrap()
    }

    #[test]
    fn identical_subspaces() {
        let v = span(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]]);
        let a = principal_angles(&v, &v).unwrap();
        assert!(a.as_slice().iter().all(|&t| t.abs() < 1e-15));
        assert!(projection_metric(&v, &v).unwrap() < 1e-15);
    }

    #[test]
    fn orthogonal_lines() {
        let a = span(&[vec![1.0, 0.0]]);
        let b = span(&[vec![0.0, 1.0]]);
        assert!((principal_angles(&a, &b).unwrap().0[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((projection_metric(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn planar_rotation() {
        let phi = 0.3_f64;
        let a = span(&[vec![1.0, 0.0]]);
        let b = span(&[vec![phi.cos(), phi.sin()]]);
        assert!((principal_angles(&a, &b).unwrap().0[0] - phi).abs() < 1e-15);
        let tiny = 1e-9_f64;
        let c = span(&[vec![tiny.cos(), tiny.sin()]]);
        assert!((principal_angles(&a, &c).unwrap().0[0] - tiny).abs() < 1e-20);
    }

    #[test]
    fn one_shared_direction() {
        let e = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        };
        let a = span(&[e(0), e(1)]);
        let b = span(&[e(0), e(2)]);
        let ang = principal_angles(&a, &b).unwrap();
        assert!(ang.0[0].abs() < 1e-15 && (ang.0[1] - FRAC_PI_2).abs() < 1e-15);
        assert!((projection_metric(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let a = span(&[vec![1.0, 0.0, 0.0]]);
        let b = span(&[vec![1.0, 0.0]]);
        assert!(matches!(projection_metric(&a, &b), Err(Error::DimMismatch(_))));
        let c = span(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!(matches!(principal_angles(&a, &c), Err(Error::DimMismatch(_))));
    }
}
