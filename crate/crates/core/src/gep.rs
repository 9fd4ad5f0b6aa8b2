//! Gradient embedding perturbation: private gradients are split into their
//! projection onto a public gradient subspace and the residual, each part is
//! clipped and perturbed separately, and the recombined estimate drives SGD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{sample_indices, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_completing, projection_metric, spectral_norm, svd, Matrix, Subspace};
use crate::models::{evaluate, per_sample_gradients, Batch, Metrics, ModelParams};
use crate::privacy::{clip_in_place, gep_noise_calibration, PrivacyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GepConfig {
    /// Public subspace dimension.
    pub k: usize,
    #[serde(default = "default_power_iterations")]
    pub power_iterations: usize,
    pub learning_rate: f64,
    /// Training steps; derived from the data when absent.
    #[serde(default)]
    pub iterations: Option<usize>,
    /// Clip norm for embedding rows (`S₁`).
    pub clip_embedding: f64,
    /// Clip norm for residual rows (`S₂`).
    pub clip_residual: f64,
    /// Noise multiplier for the embedding sum; calibrated when absent.
    #[serde(default)]
    pub sigma_embedding: Option<f64>,
    #[serde(default)]
    pub sigma_residual: Option<f64>,
    pub batch_size: usize,
    /// Public examples per step; the whole public set when absent.
    #[serde(default)]
    pub public_batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Permit non-convex models.
    #[serde(default)]
    pub allow_nonconvex: bool,
}

fn default_power_iterations() -> usize {
    20
}

impl GepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.power_iterations == 0 {
            return bad("power_iterations must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.iterations == Some(0) {
            return bad("iterations must be at least 1".into());
        }
        if !(self.clip_embedding >= 0.0 && self.clip_residual >= 0.0) {
            return bad("clip norms must be non-negative".into());
        }
        for s in [self.sigma_embedding, self.sigma_residual].into_iter().flatten() {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("noise multipliers must be non-negative, got {s}"));
            }
        }
        if self.batch_size == 0 || self.public_batch_size == Some(0) {
            return bad("batch sizes must be at least 1".into());
        }
        Ok(())
    }
}

/// Clip norms and resolved noise multipliers for a single step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub clip_embedding: f64,
    pub clip_residual: f64,
    pub sigma_embedding: f64,
    pub sigma_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GepStepTrace {
    pub step: usize,
    /// `‖G − G·V·Vᵀ‖₂`
    pub reconstruction_error: f64,
    /// `√2·s₁·gsd + s_{k+1}`
    pub lemma1_bound: f64,
    /// Projection metric between the private top-k subspace and `V`.
    pub gsd: f64,
    pub s1: f64,
    pub s_k1: f64,
    /// Full private training loss after the update (`NaN` from [`gep_step`] alone).
    pub train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeta {
    pub sigma_embedding: f64,
    pub sigma_residual: f64,
    /// Per-step standard deviations `σᵢ·Sᵢ`.
    pub std_embedding: f64,
    pub std_residual: f64,
    pub iterations: usize,
    /// Whether σ came from the Gaussian calibration.
    pub calibrated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GepResult {
    pub final_model: ModelParams<f64>,
    /// `w̄ = (1/T) Σ w_t` over the post-update iterates.
    pub averaged_model: ModelParams<f64>,
    pub trace: Vec<GepStepTrace>,
    pub noise: NoiseMeta,
    pub train_metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_metrics: Option<Metrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged_test_metrics: Option<Metrics>,
}

impl GepResult {
    pub fn max_lemma1_violation(&self) -> f64 {
        self.trace.iter().map(|t| t.reconstruction_error - t.lemma1_bound).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Top-k right subspace of `g_pub` by orthogonal iteration on `G_pubᵀG_pub`
/// from a seeded Gaussian start.
pub fn public_subspace(g_pub: &Matrix<f64>, k: usize, power_iterations: usize, seed: u64) -> Result<Subspace<f64>> {
    g_pub.ensure_finite()?;
    let max = g_pub.rows().min(g_pub.cols());
    if k == 0 || k > max {
        return Err(Error::BadK { k, max });
    }
    if power_iterations == 0 {
        return Err(Error::InvalidConfig("power_iterations must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Matrix::from_fn(g_pub.cols(), k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut v = orthonormalize_completing(&start);
    for _ in 0..power_iterations {
        let gv = g_pub.matmul(v.basis())?;
        v = orthonormalize_completing(&g_pub.t_matmul(&gv)?);
    }
    Ok(v)
}

/// `(V·ŵ + r̂)/n` with `ŵ`, `r̂` the noisy sums of clipped embeddings and residuals.
pub fn gep_step(g_priv: &Matrix<f64>, v: &Subspace<f64>, params: &StepParams, seed: u64) -> Result<(Vec<f64>, GepStepTrace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gep_step_with_rng(g_priv, v, params, &mut rng)
}

pub fn gep_step_with_rng<R: Rng + ?Sized>(
    g_priv: &Matrix<f64>,
    v: &Subspace<f64>,
    params: &StepParams,
    rng: &mut R,
) -> Result<(Vec<f64>, GepStepTrace)> {
    let (n, p) = g_priv.shape();
    let k = v.dim();
    if v.ambient_dim() != p {
        return Err(Error::DimMismatch(format!("subspace lives in R^{} but gradients in R^{p}", v.ambient_dim())));
    }
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    g_priv.ensure_finite()?;
    let basis = v.basis();
    let w = g_priv.matmul(basis)?;
    let residual = g_priv.sub(&w.matmul_t(basis)?)?;

    let mut w_sum = vec![0.0; k];
    let mut row = vec![0.0; k];
    for i in 0..n {
        row.copy_from_slice(w.row(i));
        clip_in_place(&mut row, params.clip_embedding);
        w_sum.iter_mut().zip(&row).for_each(|(s, x)| *s += x);
    }
    let mut r_sum = vec![0.0; p];
    let mut rrow = vec![0.0; p];
    for i in 0..n {
        rrow.copy_from_slice(residual.row(i));
        clip_in_place(&mut rrow, params.clip_residual);
        r_sum.iter_mut().zip(&rrow).for_each(|(s, x)| *s += x);
    }
    let std1 = params.sigma_embedding * params.clip_embedding;
    let std2 = params.sigma_residual * params.clip_residual;
    if std1 > 0.0 {
        w_sum.iter_mut().for_each(|s| *s += std1 * rng.sample::<f64, _>(StandardNormal));
    }
    if std2 > 0.0 {
        r_sum.iter_mut().for_each(|s| *s += std2 * rng.sample::<f64, _>(StandardNormal));
    }
    let embedded = basis.matvec(&w_sum)?;
    let update: Vec<f64> = embedded.iter().zip(&r_sum).map(|(a, b)| (a + b) / n as f64).collect();

    let trace = step_trace(g_priv, v, &residual)?;
    Ok((update, trace))
}

fn step_trace(g_priv: &Matrix<f64>, v: &Subspace<f64>, residual: &Matrix<f64>) -> Result<GepStepTrace> {
    let k = v.dim();
    let max = g_priv.rows().min(g_priv.cols());
    if k > max {
        return Err(Error::BadK { k, max });
    }
    let full = svd(g_priv)?;
    let s1 = full.singular_values[0];
    let s_k1 = full.singular_values.get(k).copied().unwrap_or(0.0);
    let gsd = projection_metric(&full.truncate(k).right, v)?;
    Ok(GepStepTrace {
        step: 0,
        reconstruction_error: spectral_norm(residual)?,
        lemma1_bound: std::f64::consts::SQRT_2 * s1 * gsd + s_k1,
        gsd,
        s1,
        s_k1,
        train_loss: f64::NAN,
    })
}

/// `T = round(n·β·ε/√p)` with `β` the model's smoothness bound; at least 1.
pub fn default_iterations(private: &Dataset, model: &ModelParams<f64>, epsilon: f64) -> Result<usize> {
    let beta = model
        .spec
        .smoothness_bound(private.max_feature_norm())
        .ok_or_else(|| Error::InvalidConfig("iterations must be set for models without a smoothness bound".into()))?;
    let p = model.param_count() as f64;
    Ok(((private.len() as f64 * beta * epsilon / p.sqrt()).round() as usize).max(1))
}

// Independent streams so minibatch selection matches the clipped-SGD reference.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
const SAMPLING: u64 = 0;
const NOISE: u64 = 1;
const POWER: u64 = 2;
const PUBLIC: u64 = 3;

fn resolve_noise(cfg: &GepConfig, privacy: &PrivacyParams, iterations: usize) -> Result<NoiseMeta> {
    let (mut s1, mut s2, mut warning, mut calibrated) = (cfg.sigma_embedding, cfg.sigma_residual, None, false);
    if s1.is_none() || s2.is_none() {
        privacy.validate()?;
        let cal = gep_noise_calibration(&PrivacyParams { iterations, ..*privacy });
        s1 = s1.or(Some(cal.sigma));
        s2 = s2.or(Some(cal.sigma));
        warning = cal.warning;
        calibrated = true;
    }
    let (s1, s2) = (s1.unwrap_or(0.0), s2.unwrap_or(0.0));
    Ok(NoiseMeta {
        sigma_embedding: s1,
        sigma_residual: s2,
        std_embedding: s1 * cfg.clip_embedding,
        std_residual: s2 * cfg.clip_residual,
        iterations,
        calibrated,
        warning,
    })
}

/// Private training with gradient embedding perturbation.
///
/// Each step samples a private minibatch, recomputes public gradients at the
/// current weights, estimates the public subspace, takes one perturbed step and
/// records the projection diagnostics together with the full training loss.
pub fn gep_train(
    private: &Dataset,
    public: &Dataset,
    test: Option<&Dataset>,
    model0: &ModelParams<f64>,
    cfg: &GepConfig,
    privacy: &PrivacyParams,
) -> Result<GepResult> {
    cfg.validate()?;
    if !model0.spec.is_convex() && !cfg.allow_nonconvex {
        return Err(Error::InvalidConfig("non-convex model; set allow_nonconvex to train it".into()));
    }
    if private.is_empty() || public.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let iterations = match cfg.iterations {
        Some(t) => t,
        None => default_iterations(private, model0, privacy.epsilon)?,
    };
    let noise = resolve_noise(cfg, privacy, iterations)?;
    let params = StepParams {
        clip_embedding: cfg.clip_embedding,
        clip_residual: cfg.clip_residual,
        sigma_embedding: noise.sigma_embedding,
        sigma_residual: noise.sigma_residual,
    };
    let full_train = private.as_batch();
    let mut sample_rng = stream(cfg.seed, SAMPLING);
    let mut noise_rng = stream(cfg.seed, NOISE);
    let mut power_rng = stream(cfg.seed, POWER);
    let mut public_rng = stream(cfg.seed, PUBLIC);

    let mut model = model0.clone();
    let mut avg = vec![0.0; model.param_count()];
    let mut trace = Vec::with_capacity(iterations);
    for t in 0..iterations {
        let batch = private.subset(&sample_indices(&mut sample_rng, private.len(), cfg.batch_size));
        let pub_batch = match cfg.public_batch_size {
            Some(b) => public.subset(&sample_indices(&mut public_rng, public.len(), b)),
            None => public.as_batch(),
        };
        let g_priv = per_sample_gradients(&model, &batch)?;
        let g_pub = per_sample_gradients(&model, &pub_batch)?;
        let v = public_subspace(&g_pub, cfg.k, cfg.power_iterations, power_rng.random())?;
        let (update, mut step) = gep_step_with_rng(&g_priv, &v, &params, &mut noise_rng)?;
        model.step(cfg.learning_rate, &update);
        avg.iter_mut().zip(&model.theta).for_each(|(a, w)| *a += w);
        step.step = t + 1;
        step.train_loss = evaluate(&model, &full_train)?.loss;
        trace.push(step);
    }
    avg.iter_mut().for_each(|a| *a /= iterations as f64);
    let averaged_model = ModelParams::new(model.spec.clone(), avg)?;
    let eval_test = |m: &ModelParams<f64>| test.map(|d| evaluate(m, &d.as_batch())).transpose();
    Ok(GepResult {
        train_metrics: evaluate(&model, &full_train)?,
        test_metrics: eval_test(&model)?,
        averaged_test_metrics: eval_test(&averaged_model)?,
        final_model: model,
        averaged_model,
        trace,
        noise,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClippedSgdResult {
    pub model: ModelParams<f64>,
    /// Full training loss after each step.
    pub losses: Vec<f64>,
}

/// Non-private reference: SGD on the mean of row-clipped per-example
/// gradients, drawing minibatches exactly as [`gep_train`] does for the same seed.
pub fn clipped_sgd_train(
    private: &Dataset,
    model0: &ModelParams<f64>,
    learning_rate: f64,
    iterations: usize,
    batch_size: usize,
    clip: f64,
    seed: u64,
) -> Result<ClippedSgdResult> {
    let full_train = private.as_batch();
    let mut rng = stream(seed, SAMPLING);
    let mut model = model0.clone();
    let mut losses = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let batch: Batch<f64> = private.subset(&sample_indices(&mut rng, private.len(), batch_size));
        let mut g = per_sample_gradients(&model, &batch)?;
        let mut sum = vec![0.0; g.cols()];
        for i in 0..g.rows() {
            let row = g.row_mut(i);
            clip_in_place(row, clip);
            sum.iter_mut().zip(row.iter()).for_each(|(s, x)| *s += x);
        }
        let n = batch.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        model.step(learning_rate, &sum);
        losses.push(evaluate(&model, &full_train)?.loss);
    }
    Ok(ClippedSgdResult { model, losses })
}

/// Trace as CSV with header `t,r_t,d_t,gsd_t,s1_t,sk1_t,loss`.
pub fn trace_csv(trace: &[GepStepTrace]) -> String {
    let mut out = String::from("t,r_t,d_t,gsd_t,s1_t,sk1_t,loss\n");
    for s in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.step, s.reconstruction_error, s.lemma1_bound, s.gsd, s.s1, s.s_k1, s.train_loss
        ));
    }
    out
}
