use super::matrix::{norm2, Matrix};
use crate::error::Result;
use crate::scalar::Scalar;

/// Gram matrices up to this size are repeatedly squared before iterating.
const SQUARING_LIMIT: usize = 512;
const SQUARINGS: usize = 8;
const MAX_ITERS: usize = 10_000;

/// Largest singular value `s₁(M)` by power iteration on the smaller Gram matrix.
///
/// For Gram matrices up to 512 square the iteration runs on `C^(2^8)` (formed
/// by normalized squaring), which makes the per-step contraction factor
/// `(λ₂/λ₁)^256`; the eigenvalue is then read off the Rayleigh quotient of the
/// original `C`. Iteration stops once the iterate moves less than `1e-14`.
pub fn spectral_norm<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    m.ensure_finite()?;
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(T::zero());
    }
    let scale = m.max_abs();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let scaled = m.scale(T::one() / scale);
    let gram = if scaled.cols() <= scaled.rows() {
        scaled.t_matmul(&scaled)?
    } else {
        scaled.matmul_t(&scaled)?
    };
    let n = gram.rows();

    let accelerated = if n <= SQUARING_LIMIT {
        let mut b = gram.clone();
        for _ in 0..SQUARINGS {
            b = b.matmul(&b)?;
            let mx = b.max_abs();
            if mx == T::zero() {
                break;
            }
            b = b.scale(T::one() / mx);
        }
        b
    } else {
        gram.clone()
    };

    // Start from the heaviest column: it has a non-trivial top-eigenvector component.
    let mut x = (0..n)
        .map(|j| accelerated.column(j))
        .max_by(|a, b| norm2(a).partial_cmp(&norm2(b)).expect("finite"))
        .expect("n > 0");
    if !normalize(&mut x) {
        x = vec![T::one() / T::lit(n as f64).sqrt(); n];
    }
    let tol = T::lit(1e-14).max(T::epsilon() * T::lit(10.0));
    for _ in 0..MAX_ITERS {
        let mut y = accelerated.matvec(&x)?;
        if !normalize(&mut y) {
            break;
        }
        let moved = x.iter().zip(&y).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
        x = y;
        if moved <= tol {
            break;
        }
    }
    let cx = gram.matvec(&x)?;
    let lambda: T = x.iter().zip(&cx).map(|(&a, &b)| a * b).sum();
    Ok(lambda.max(T::zero()).sqrt() * scale)
}

fn normalize<T: Scalar>(x: &mut [T]) -> bool {
    let n = norm2(x);
    if n == T::zero() || !n.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_zero() {
        assert!((spectral_norm(&Matrix::diag(&[3.0_f64, 2.0, 1.0])).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&Matrix::<f64>::zeros(4, 2)).unwrap(), 0.0);
    }

    #[test]
    fn near_tie_still_converges() {
        let m = Matrix::diag(&[1.0_f64, 0.999_999, 0.5]);
        assert!((spectral_norm(&m).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_tie() {
        let m = Matrix::diag(&[2.0_f64, 2.0, 2.0]);
        assert!((spectral_norm(&m).unwrap() - 2.0).abs() < 1e-14);
    }
}
