//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Rotations are applied to the columns of `M` when `cols ≤ rows` and to the
//! columns of `Mᵀ` otherwise, so the accumulated rotation matrix is always
//! `min(rows, cols)` square.

use super::matrix::{axpy, dot, norm2, Matrix};
use super::qr::complement_vector;
use super::subspace::Subspace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Truncated or thin singular value decomposition `M ≈ U·diag(s)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    /// `rows × r` column-orthonormal.
    pub left: Matrix<T>,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<T>,
    /// `cols × r` right singular vectors.
    pub right: Subspace<T>,
}

impl<T: Scalar> SvdResult<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U·diag(s)·Vᵀ`
    pub fn reconstruct(&self) -> Matrix<T> {
        let r = self.rank();
        let us = Matrix::from_fn(self.left.rows(), r, |i, j| self.left[(i, j)] * self.singular_values[j]);
        us.matmul_t(self.right.basis()).expect("consistent factors")
    }

    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.rank());
        self.singular_values.truncate(k);
        self.left = self.left.leading_columns(k);
        self.right = Subspace::from_matrix_unchecked(self.right.basis().leading_columns(k));
        self
    }
}

/// Thin SVD with `r = min(rows, cols)` triplets.
///
/// Singular values are sorted non-increasing with ties kept in original column
/// order; each right singular vector is signed so its largest-magnitude entry
/// (first one on ties) is non-negative.
pub fn svd<T: Scalar>(m: &Matrix<T>) -> Result<SvdResult<T>> {
    m.ensure_finite()?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let wide = cols > rows;
    // Work on the columns of M (tall case) or of Mᵀ (wide case).
    let mut work: Vec<Vec<T>> = if wide { m.row_iter().map(<[T]>::to_vec).collect() } else { m.columns() };
    let acc = one_sided_jacobi(&mut work);
    let r = work.len();
    let norms: Vec<T> = work.iter().map(|c| norm2(c)).collect();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));

    let s1 = norms[order[0]];
    let negligible = s1 * T::epsilon() * T::lit(r as f64);
    let singular_values: Vec<T> = order.iter().map(|&j| norms[j]).collect();

    // Vectors taken straight from the accumulated rotations are orthonormal;
    // the normalized working columns need care for tiny singular values.
    let rotated: Vec<Vec<T>> = order.iter().map(|&j| acc[j].clone()).collect();
    let dim = if wide { cols } else { rows };
    let normalized = normalize_columns(&order, &work, &singular_values, negligible, dim);

    let (mut left, mut right) = if wide { (rotated, normalized) } else { (normalized, rotated) };

    for (u, v) in left.iter_mut().zip(right.iter_mut()) {
        if needs_flip(v) {
            v.iter_mut().for_each(|x| *x = -*x);
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(SvdResult {
        left: Matrix::from_columns(rows, &left),
        singular_values,
        right: Subspace::from_columns_unchecked(cols, &right),
    })
}

/// Top-`k` singular triplets.
pub fn top_k_svd<T: Scalar>(m: &Matrix<T>, k: usize) -> Result<SvdResult<T>> {
    let max = m.rows().min(m.cols());
    if k == 0 || k > max {
        return Err(Error::BadK { k, max });
    }
    Ok(svd(m)?.truncate(k))
}

/// All `min(rows, cols)` singular values, non-increasing.
pub fn singular_values<T: Scalar>(m: &Matrix<T>) -> Result<Vec<T>> {
    Ok(svd(m)?.singular_values)
}

/// Rotates the columns in place until they are mutually orthogonal; returns the
/// accumulated rotation as columns of a `c × c` orthogonal matrix.
fn one_sided_jacobi<T: Scalar>(cols: &mut [Vec<T>]) -> Vec<Vec<T>> {
    let c = cols.len();
    let mut acc: Vec<Vec<T>> = (0..c)
        .map(|j| {
            let mut e = vec![T::zero(); c];
            e[j] = T::one();
            e
        })
        .collect();
    let tol = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        let mut sq: Vec<T> = cols.iter().map(|v| dot(v, v)).collect();
        for i in 0..c {
            for j in (i + 1)..c {
                let (alpha, beta) = (sq[i], sq[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                rotate_pair(cols, i, j, cs, sn);
                rotate_pair(&mut acc, i, j, cs, sn);
                sq[i] = alpha - t * gamma;
                sq[j] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }
    acc
}

fn rotate_pair<T: Scalar>(cols: &mut [Vec<T>], i: usize, j: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(j);
    let (a, b) = (&mut lo[i], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yi) = (*x, *y);
        *x = c * xi - s * yi;
        *y = s * xi + c * yi;
    }
}

/// Unit-normalizes `work[order[j]]` by its singular value, re-orthogonalizing
/// against earlier vectors and completing where the value is negligible.
fn normalize_columns<T: Scalar>(
    order: &[usize],
    work: &[Vec<T>],
    singular_values: &[T],
    negligible: T,
    dim: usize,
) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(order.len());
    for (pos, &j) in order.iter().enumerate() {
        let s = singular_values[pos];
        let mut v = None;
        if s > negligible {
            let mut cand: Vec<T> = work[j].iter().map(|&x| x / s).collect();
            for q in &out {
                let c = dot(q, &cand);
                axpy(-c, q, &mut cand);
            }
            let n = norm2(&cand);
            if n > T::lit(0.5) {
                cand.iter_mut().for_each(|x| *x /= n);
                v = Some(cand);
            }
        }
        out.push(v.unwrap_or_else(|| complement_vector(&out, dim)));
    }
    out
}

fn needs_flip<T: Scalar>(v: &[T]) -> bool {
    let mut best = T::zero();
    let mut sign_negative = false;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            sign_negative = x < T::zero();
        }
    }
    sign_negative
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_case() {
        let m = Matrix::diag(&[3.0_f64, 2.0, 1.0]);
        let r = top_k_svd(&m, 2).unwrap();
        assert_eq!(r.singular_values, vec![3.0, 2.0]);
        let v = r.right.basis();
        assert!((v[(0, 0)] - 1.0).abs() < 1e-15 && (v[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outer_product() {
        let u = [1.0_f64, -2.0, 0.5, 3.0];
        let v = [0.3_f64, -0.4, 1.2];
        let m = Matrix::from_fn(4, 3, |i, j| u[i] * v[j]);
        let r = top_k_svd(&m, 1).unwrap();
        let expected = norm2(&u) * norm2(&v);
        assert!((r.singular_values[0] - expected).abs() < 1e-12);
        let nv = norm2(&v);
        let dir = r.right.vector(0);
        // largest entry 1.2 must come out positive
        for (a, b) in dir.iter().zip(v.iter()) {
            assert!((a - b / nv).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_and_tall_reconstruct() {
        let tall = Matrix::from_fn(7, 4, |i, j| ((i * 31 + j * 17) % 11) as f64 - 5.0);
        for m in [tall.clone(), tall.transpose()] {
            let r = svd(&m).unwrap();
            let err = r.reconstruct().sub(&m).unwrap().max_abs();
            assert!(err < 1e-12 * r.singular_values[0], "err {err}");
            let g = r.right.basis().t_matmul(r.right.basis()).unwrap();
            assert!(g.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-12);
            let gl = r.left.t_matmul(&r.left).unwrap();
            assert!(gl.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_still_has_orthonormal_factors() {
        let m = Matrix::<f64>::zeros(3, 5);
        let r = svd(&m).unwrap();
        assert!(r.singular_values.iter().all(|&s| s == 0.0));
        let g = r.right.basis().t_matmul(r.right.basis()).unwrap();
        assert!(g.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_k_and_nan() {
        let m = Matrix::<f64>::identity(3);
        assert!(matches!(top_k_svd(&m, 0), Err(Error::BadK { .. })));
        assert!(matches!(top_k_svd(&m, 4), Err(Error::BadK { .. })));
        let mut n = m.clone();
        n[(1, 1)] = f64::NAN;
        assert!(matches!(top_k_svd(&n, 1), Err(Error::NonFinite)));
    }

    #[test]
    fn ties_keep_index_order() {
        let m = Matrix::diag(&[1.0_f64, 2.0, 2.0]);
        let r = svd(&m).unwrap();
        assert_eq!(r.singular_values, vec![2.0, 2.0, 1.0]);
        assert_eq!(r.right.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(r.right.vector(1), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::from_fn(6, 3, |i, j| ((i + 2 * j) % 5) as f32 - 1.5);
        let r = svd(&m).unwrap();
        let err = r.reconstruct().sub(&m).unwrap().max_abs();
        assert!(err < 1e-5 * r.singular_values[0]);
    }
}
