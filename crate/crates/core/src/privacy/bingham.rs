//! Sampling unit vectors with density proportional to `exp(vᵀAv)` on the
//! sphere `S^{p-1}`.
//!
//! Work happens in the eigenbasis of `A`. With `μ₁ ≥ … ≥ μ_p` the eigenvalues,
//! the target is rewritten as `exp(−Σ λᵢ xᵢ²)` with `λᵢ = μ₁ − μᵢ ≥ 0`, which
//! is the same distribution on the sphere.
//!
//! Primary route: rejection from an angular central Gaussian envelope with
//! `Ω = I + 2Λ/b`, where `b ∈ (0, p]` solves `Σ 1/(b + 2λᵢ) = 1`. The density
//! ratio is bounded by `M = exp(−(p − b)/2)·(p/b)^{p/2}`, so accepted draws are
//! exact. If [`REJECTION_BUDGET`] proposals are all rejected (expected
//! acceptance well below 1%), the draw falls back to a Gibbs chain that
//! resamples pairs of eigen-coordinates along great circles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, relative_asymmetry, symmetric_eigen, Matrix};

/// Proposals tried before switching to the Gibbs fallback.
pub const REJECTION_BUDGET: usize = 1000;
/// Full sweeps over all coordinate pairs in the fallback chain.
pub const GIBBS_SWEEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMethod {
    Rejection,
    Gibbs,
}

/// Precomputed state for repeated draws from one Bingham distribution.
#[derive(Debug, Clone)]
pub struct BinghamSampler {
    /// Eigenvectors of `A` as columns, by non-increasing eigenvalue.
    eigvecs: Matrix<f64>,
    /// `λᵢ = μ₁ − μᵢ`
    lambda: Vec<f64>,
    /// Envelope standard deviations `1/sqrt(1 + 2λᵢ/b)`.
    envelope_sd: Vec<f64>,
    b: f64,
    log_bound: f64,
}

impl BinghamSampler {
    /// Fails with [`Error::NonSymmetric`] when `‖A − Aᵀ‖_max > 1e-9·‖A‖_max`.
    pub fn new(a: &Matrix<f64>) -> Result<Self> {
        a.ensure_finite()?;
        if a.rows() != a.cols() {
            return Err(Error::DimMismatch(format!("Bingham parameter must be square, got {}x{}", a.rows(), a.cols())));
        }
        let asym = relative_asymmetry(a);
        if asym > 1e-9 {
            return Err(Error::NonSymmetric { asymmetry: asym });
        }
        let eig = symmetric_eigen(a)?;
        let top = eig.values[0];
        let lambda: Vec<f64> = eig.values.iter().map(|&mu| (top - mu).max(0.0)).collect();
        let p = lambda.len() as f64;
        let b = solve_envelope_b(&lambda);
        let envelope_sd = lambda.iter().map(|&l| 1.0 / (1.0 + 2.0 * l / b).sqrt()).collect();
        let log_bound = -(p - b) / 2.0 + (p / 2.0) * (p / b).ln();
        Ok(Self { eigvecs: eig.vectors, lambda, envelope_sd, b, log_bound })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Envelope parameter `b`.
    pub fn envelope_b(&self) -> f64 {
        self.b
    }

    /// One unit vector in the original coordinates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with_method(rng).0
    }

    pub fn sample_with_method<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, SampleMethod) {
        let (x, method) = match self.try_rejection(rng, REJECTION_BUDGET) {
            Some(x) => (x, SampleMethod::Rejection),
            None => (self.gibbs(rng, GIBBS_SWEEPS), SampleMethod::Gibbs),
        };
        (self.to_ambient(&x), method)
    }

    /// Rejection sampling only; `None` if the budget runs out.
    pub fn try_rejection<R: Rng + ?Sized>(&self, rng: &mut R, budget: usize) -> Option<Vec<f64>> {
        let p = self.dim() as f64;
        for _ in 0..budget {
            let mut y: Vec<f64> = self.envelope_sd.iter().map(|&sd| sd * rng.sample::<f64, _>(StandardNormal)).collect();
            let n = norm2(&y);
            if n == 0.0 {
                continue;
            }
            y.iter_mut().for_each(|v| *v /= n);
            let quad: f64 = self.lambda.iter().zip(&y).map(|(&l, &x)| l * x * x).sum();
            let log_ratio = -quad + (p / 2.0) * (1.0 + 2.0 * quad / self.b).ln() - self.log_bound;
            let u: f64 = rng.random();
            if u.ln() < log_ratio {
                return Some(y);
            }
        }
        None
    }

    /// Gibbs chain in eigen-coordinates started at ±e₁.
    ///
    /// Each update keeps all coordinates but a pair `(i, j)` fixed; the pair
    /// then lies on a circle of radius `r` whose angle `φ` has density
    /// `∝ exp(κ cos 2φ)` with `κ = r²(λⱼ − λᵢ)/2`, i.e. `2φ` is von Mises.
    pub fn gibbs<R: Rng + ?Sized>(&self, rng: &mut R, sweeps: usize) -> Vec<f64> {
        let p = self.dim();
        let mut x = vec![0.0; p];
        x[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        if p == 1 {
            return x;
        }
        for _ in 0..sweeps {
            for i in 0..p {
                for j in (i + 1)..p {
                    let r2 = x[i] * x[i] + x[j] * x[j];
                    let kappa = r2 * (self.lambda[j] - self.lambda[i]) / 2.0;
                    let psi = if kappa >= 0.0 {
                        von_mises(rng, kappa)
                    } else {
                        von_mises(rng, -kappa) + std::f64::consts::PI
                    };
                    let phi = psi / 2.0 + if rng.random::<bool>() { std::f64::consts::PI } else { 0.0 };
                    let r = r2.sqrt();
                    x[i] = r * phi.cos();
                    x[j] = r * phi.sin();
                }
            }
        }
        let n = norm2(&x);
        x.iter_mut().for_each(|v| *v /= n);
        x
    }

    fn to_ambient(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.eigvecs.matvec(x).expect("square eigenbasis");
        let n = norm2(&v);
        v.iter_mut().for_each(|c| *c /= n);
        v
    }
}

/// Root of `Σ 1/(b + 2λᵢ) = 1` on `(0, p]`; `p` when every `λᵢ` is zero.
fn solve_envelope_b(lambda: &[f64]) -> f64 {
    let p = lambda.len() as f64;
    let f = |b: f64| lambda.iter().map(|&l| 1.0 / (b + 2.0 * l)).sum::<f64>() - 1.0;
    if f(p) >= 0.0 {
        return p;
    }
    let (mut lo, mut hi) = (0.0_f64, p);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Von Mises angle with mean 0 and concentration `κ ≥ 0` (Best–Fisher), in `(−π, π]`.
pub fn von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    use std::f64::consts::PI;
    if kappa < 1e-10 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    if kappa > 1e7 {
        // wrapped-normal limit; the Best–Fisher constants lose precision here
        let z: f64 = rng.sample(StandardNormal);
        return z / kappa.sqrt();
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}

/// One draw from the Bingham distribution with parameter `A`, seeded.
pub fn bingham_sample(a: &Matrix<f64>, seed: u64) -> Result<Vec<f64>> {
    let sampler = BinghamSampler::new(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}
