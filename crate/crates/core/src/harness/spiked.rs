//! Gradient matrices with a planted spectrum: row `i` is
//! `Σⱼ cⱼ·sᵢⱼ·qⱼ` with random signs `sᵢⱼ`, `c₁² = lead`, `cⱼ² = bulk` for
//! `j ≥ 2`, and `q` a random orthonormal frame. Every row has the same norm
//! and `E[GᵀG/m] = lead·q₁q₁ᵀ + bulk·Σ_{j≥2} qⱼqⱼᵀ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub lead: f64,
    pub bulk: f64,
}

impl Default for Spike {
    fn default() -> Self {
        Self { lead: 0.52, bulk: 0.02 }
    }
}

impl Spike {
    pub fn validate(&self) -> Result<()> {
        if self.lead > self.bulk && self.bulk >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("spike needs lead > bulk ≥ 0, got {self:?}")))
        }
    }

    pub fn top_eigenvalue(&self) -> f64 {
        self.lead
    }

    pub fn eigengap(&self) -> f64 {
        self.lead - self.bulk
    }

    pub fn row_norm(&self, p: usize) -> f64 {
        (self.lead + (p - 1) as f64 * self.bulk).sqrt()
    }
}

/// Random orthonormal `p × p` frame.
pub fn random_frame(p: usize, seed: u64) -> Result<Matrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(orthonormalize(&Matrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal)))?.into_basis())
}

/// Rotates the first two columns of `frame` by `angle`.
pub fn tilt(frame: &Matrix<f64>, angle: f64) -> Matrix<f64> {
    let (s, c) = angle.sin_cos();
    let mut out = frame.clone();
    for i in 0..frame.rows() {
        let (a, b) = (frame[(i, 0)], frame[(i, 1)]);
        out[(i, 0)] = c * a + s * b;
        out[(i, 1)] = -s * a + c * b;
    }
    out
}

pub fn spiked_gradients(m: usize, frame: &Matrix<f64>, spike: &Spike, seed: u64) -> Matrix<f64> {
    let p = frame.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<f64> = (0..p).map(|j| if j == 0 { spike.lead.sqrt() } else { spike.bulk.sqrt() }).collect();
    let mut g = Matrix::zeros(m, frame.rows());
    for i in 0..m {
        let row = g.row_mut(i);
        for (j, &c) in coef.iter().enumerate() {
            let s = if rng.random::<bool>() { c } else { -c };
            for (r, x) in row.iter_mut().enumerate() {
                *x += s * frame[(r, j)];
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn rows_have_planted_norm() {
        let spike = Spike::default();
        let f = random_frame(20, 1).unwrap();
        let g = spiked_gradients(50, &f, &spike, 2);
        for r in g.row_iter() {
            assert!((norm2(r) - spike.row_norm(20)).abs() < 1e-12);
        }
        assert!((spike.row_norm(20) - 0.9f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tilt_keeps_frame_orthonormal() {
        let f = tilt(&random_frame(5, 3).unwrap(), 0.4);
        let gram = f.t_matmul(&f).unwrap();
        assert!(gram.sub(&Matrix::identity(5)).unwrap().max_abs() < 1e-12);
    }
}
