use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = Q·diag(λ)·Qᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Non-increasing.
    pub values: Vec<T>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: Matrix<T>,
}

/// Max entrywise asymmetry `‖A − Aᵀ‖_max`, relative to `‖A‖_max`.
pub fn relative_asymmetry<T: Scalar>(a: &Matrix<T>) -> T {
    let scale = a.max_abs();
    if scale == T::zero() {
        return T::zero();
    }
    let mut worst = T::zero();
    for i in 0..a.rows() {
        for j in (i + 1)..a.cols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Cyclic two-sided Jacobi eigensolver.
///
/// Rejects inputs with relative asymmetry above `1e-9`; the strictly lower
/// triangle is mirrored from the upper one before iterating.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    a.ensure_finite()?;
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimMismatch(format!("eigendecomposition of non-square {}x{}", n, a.cols())));
    }
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let asym = relative_asymmetry(a);
    if asym > T::lit(1e-9) {
        return Err(Error::NonSymmetric { asymmetry: asym.to_f64_lossy() });
    }
    let mut m = Matrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut q = Matrix::<T>::identity(n);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[(i, i)] * m[(i, i)];
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= eps * eps * (diag + off) * T::lit(0.25) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = m[(p, r)];
                if apr == T::zero() {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (T::lit(2.0) * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkr = m[(k, r)];
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mrk = m[(r, k)];
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(y, y)].partial_cmp(&m[(x, x)]).expect("finite"));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok(SymmetricEigen { values, vectors })
}
