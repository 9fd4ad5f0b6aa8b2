use super::matrix::{axpy, dot, norm2, Matrix};
use super::subspace::Subspace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Orthonormal basis for the column space of `m` (modified Gram–Schmidt, two passes).
///
/// Fails with [`Error::RankDeficient`] if any residual pivot falls below
/// `rank_tolerance · largest pivot`.
pub fn orthonormalize<T: Scalar>(m: &Matrix<T>) -> Result<Subspace<T>> {
    m.ensure_finite()?;
    if m.cols() == 0 || m.rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if m.cols() > m.rows() {
        return Err(Error::RankDeficient { column: m.rows(), pivot: 0.0, threshold: 0.0 });
    }
    let tol = T::rank_tolerance();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m.cols());
    let mut largest = T::zero();
    for j in 0..m.cols() {
        let mut v = m.column(j);
        let pivot = project_out(&basis, &mut v);
        largest = largest.max(pivot);
        let threshold = tol * largest;
        if pivot <= threshold || pivot == T::zero() {
            return Err(Error::RankDeficient {
                column: j,
                pivot: pivot.to_f64_lossy(),
                threshold: threshold.to_f64_lossy(),
            });
        }
        let n = norm2(&v);
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
    Ok(Subspace::from_columns_unchecked(m.rows(), &basis))
}

/// Orthonormalizes the columns of `m`, replacing dependent columns with
/// deterministic unit vectors from the orthogonal complement.
pub(crate) fn orthonormalize_completing<T: Scalar>(m: &Matrix<T>) -> Subspace<T> {
    let p = m.rows();
    let tol = T::rank_tolerance();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m.cols());
    let mut largest = T::zero();
    for j in 0..m.cols() {
        let mut v = m.column(j);
        let original = norm2(&v);
        largest = largest.max(original);
        let pivot = project_out(&basis, &mut v);
        if pivot > tol * largest && pivot > T::zero() {
            let n = norm2(&v);
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        } else {
            basis.push(complement_vector(&basis, p));
        }
    }
    Subspace::from_columns_unchecked(p, &basis)
}

/// Removes the components of `v` along the (orthonormal) `basis`, twice, and
/// returns the remaining norm.
fn project_out<T: Scalar>(basis: &[Vec<T>], v: &mut [T]) -> T {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
    norm2(v)
}

/// Unit vector orthogonal to `basis`, chosen from the standard basis vectors
/// with the largest remaining component.
pub(crate) fn complement_vector<T: Scalar>(basis: &[Vec<T>], p: usize) -> Vec<T> {
    // ‖(I − QQᵀ)eᵢ‖² = 1 − Σ_q qᵢ²
    let mut best = (0, T::neg_infinity());
    for i in 0..p {
        let r = T::one() - basis.iter().fold(T::zero(), |s, q| s + q[i] * q[i]);
        if r > best.1 {
            best = (i, r);
        }
    }
    let mut v = vec![T::zero(); p];
    v[best.0] = T::one();
    let r = project_out(basis, &mut v);
    v.iter_mut().for_each(|x| *x /= r);
    v
}
