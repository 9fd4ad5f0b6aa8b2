use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A k-dimensional subspace of `R^p` held as a `p × k` column-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T> {
    basis: Matrix<T>,
}

impl<T: Scalar> Subspace<T> {
    /// Wraps a basis after checking `BᵀB = I` within [`Scalar::ortho_tolerance`].
    pub fn from_basis(basis: Matrix<T>) -> Result<Self> {
        basis.ensure_finite()?;
        let (p, k) = basis.shape();
        if k == 0 || k > p {
            return Err(Error::BadK { k, max: p });
        }
        let gram = basis.t_matmul(&basis)?;
        let dev = gram.sub(&Matrix::identity(k))?.max_abs();
        if dev > T::ortho_tolerance() {
            return Err(Error::InvalidConfig(format!(
                "basis is not column-orthonormal (max |BᵀB - I| = {:e})",
                dev.to_f64_lossy()
            )));
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_matrix_unchecked(basis: Matrix<T>) -> Self {
        Self { basis }
    }

    pub(crate) fn from_columns_unchecked(p: usize, cols: &[Vec<T>]) -> Self {
        Self { basis: Matrix::from_columns(p, cols) }
    }

    /// Span of a single non-zero vector.
    pub fn from_vector(v: &[T]) -> Result<Self> {
        let n = super::matrix::norm2(v);
        if n == T::zero() || !n.is_finite() {
            return Err(Error::RankDeficient { column: 0, pivot: 0.0, threshold: 0.0 });
        }
        Ok(Self { basis: Matrix::from_fn(v.len(), 1, |i, _| v[i] / n) })
    }

    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix<T> {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn vector(&self, j: usize) -> Vec<T> {
        self.basis.column(j)
    }

    /// Orthogonal projector `B·Bᵀ` (p × p).
    pub fn projector(&self) -> Matrix<T> {
        self.basis.matmul_t(&self.basis).expect("same column count")
    }

    /// Coordinates of each row of `m` in this basis: `m · B` (rows × k).
    pub fn embed_rows(&self, m: &Matrix<T>) -> Result<Matrix<T>> {
        m.matmul(&self.basis)
    }

    /// Same subspace, basis right-multiplied by a `k × k` matrix (orthogonal for a valid result).
    pub fn rebased(&self, q: &Matrix<T>) -> Result<Self> {
        Self::from_basis(self.basis.matmul(q)?)
    }

    pub fn cast<U: Scalar>(&self) -> Subspace<U> {
        Subspace { basis: self.basis.cast() }
    }
}
