use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bingham::{BinghamSampler, SampleMethod};
use super::calibration::{required_sample_size, CloseApprox, PrivacyParams};
use super::clip::clip_rows;
use crate::error::{Error, Result};
use crate::gsd::GsdReport;
use crate::linalg::{norm2, principal_angles, projection_metric, symmetric_eigen, top_k_svd, Matrix, Subspace};
use crate::models::{per_sample_gradients, Batch, ModelParams};

/// Name reported in the `privacy` block of a DP-GSD result.
pub const MECHANISM: &str = "exponential-mechanism/bingham";

/// Spectrum facts about `A = GᵀG/m` that drive the private sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpPcaDiagnostics {
    pub top_eigenvalue: f64,
    /// `λ₁ − λ₂`
    pub eigengap: f64,
    pub p: usize,
    pub m: usize,
}

impl DpPcaDiagnostics {
    /// Computed from the (clipped) gradient matrix; not private.
    pub fn from_gradients(g: &Matrix<f64>) -> Result<Self> {
        let a = second_moment(g)?;
        let eig = symmetric_eigen(&a)?;
        let l1 = eig.values[0];
        let l2 = eig.values.get(1).copied().unwrap_or(0.0);
        Ok(Self { top_eigenvalue: l1, eigengap: (l1 - l2).max(0.0), p: g.cols(), m: g.rows() })
    }

    pub fn required_m(&self, close: CloseApprox, epsilon: f64, c: f64) -> Result<f64> {
        required_sample_size(self, close, epsilon, c)
    }
}

/// `GᵀG/m`, symmetrised exactly.
fn second_moment(g: &Matrix<f64>) -> Result<Matrix<f64>> {
    if g.rows() == 0 || g.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    g.ensure_finite()?;
    let mut a = g.t_matmul(g)?.scale(1.0 / g.rows() as f64);
    let p = a.cols();
    for i in 0..p {
        for j in (i + 1)..p {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    Ok(a)
}

/// Sampler for `BMF((mε/2)·A)` with `A = GᵀG/m`, for repeated draws.
pub fn dp_pca_sampler(g: &Matrix<f64>, epsilon: f64) -> Result<BinghamSampler> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let m = g.rows() as f64;
    let a = second_moment(g)?;
    BinghamSampler::new(&a.scale(m * epsilon / 2.0))
}

fn check_clipped(g: &Matrix<f64>, c: f64) -> Result<()> {
    if let Some((i, n)) = g.row_iter().map(norm2).enumerate().find(|&(_, n)| n > c * (1.0 + 1e-9)) {
        return Err(Error::InvalidConfig(format!("row {i} has norm {n} above clip norm {c}; clip first")));
    }
    Ok(())
}

/// Private top eigenvector of `GᵀG/m` for row-clipped `G` (rows must have norm ≤ `c`).
pub fn dp_pca(g: &Matrix<f64>, epsilon: f64, c: f64, seed: u64) -> Result<Subspace<f64>> {
    dp_pca_with_method(g, epsilon, c, seed).map(|(s, _)| s)
}

pub fn dp_pca_with_method(g: &Matrix<f64>, epsilon: f64, c: f64, seed: u64) -> Result<(Subspace<f64>, SampleMethod)> {
    if g.rows() == 0 || g.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    check_clipped(g, c)?;
    let sampler = dp_pca_sampler(g, epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (v, method) = sampler.sample_with_method(&mut rng);
    Ok((Subspace::from_vector(&v)?, method))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBlock {
    pub mechanism: String,
    pub epsilon: f64,
    pub delta: f64,
    pub clip_norm: f64,
    /// `ε/c²`
    pub epsilon_effective: f64,
    /// Sensitivity of the score `m·vᵀAv` to one clipped row: `c²`.
    pub score_sensitivity: f64,
    pub sample_method: SampleMethod,
}

/// DP-GSD output. The private singular values are withheld.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpGsdReport {
    #[serde(flatten)]
    pub report: GsdReport,
    pub privacy: PrivacyBlock,
}

/// Private-side subspace from clipped DPPCA, public side from an exact top-1 SVD.
pub fn dp_gsd_from_gradients(
    g_priv: &Matrix<f64>,
    g_pub: &Matrix<f64>,
    params: &PrivacyParams,
    seed: u64,
) -> Result<DpGsdReport> {
    params.validate()?;
    if g_priv.cols() != g_pub.cols() {
        return Err(Error::DimMismatch(format!("gradient matrices have {} and {} columns", g_priv.cols(), g_pub.cols())));
    }
    let c = params.clip_norm;
    let clipped = clip_rows(g_priv, c);
    let (v_priv, method) = dp_pca_with_method(&clipped, params.epsilon, c, seed)?;
    let pub_svd = top_k_svd(g_pub, 1)?;
    let v_pub = pub_svd.right.clone();
    let distance = projection_metric(&v_priv, &v_pub)?;
    let report = GsdReport {
        k: 1,
        angles: principal_angles(&v_priv, &v_pub)?,
        distance_raw: distance,
        distance_normalized: distance,
        priv_singular_values: Vec::new(),
        pub_singular_values: pub_svd.singular_values,
        m_priv: g_priv.rows(),
        m_pub: g_pub.rows(),
        p: g_priv.cols(),
    };
    let privacy = PrivacyBlock {
        mechanism: MECHANISM.to_string(),
        epsilon: params.epsilon,
        delta: params.delta,
        clip_norm: c,
        epsilon_effective: params.epsilon / (c * c),
        score_sensitivity: c * c,
        sample_method: method,
    };
    Ok(DpGsdReport { report, privacy })
}

/// Differentially private GSD (`k = 1`) of two batches at the given weights.
pub fn dp_gsd(
    priv_batch: &Batch<f64>,
    pub_batch: &Batch<f64>,
    model: &ModelParams<f64>,
    params: &PrivacyParams,
    seed: u64,
) -> Result<DpGsdReport> {
    let g_priv = per_sample_gradients(model, priv_batch)?;
    let g_pub = per_sample_gradients(model, pub_batch)?;
    dp_gsd_from_gradients(&g_priv, &g_pub, params, seed)
}
