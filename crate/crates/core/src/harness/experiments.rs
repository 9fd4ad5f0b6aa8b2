use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::spiked::{random_frame, spiked_gradients, tilt};
use super::stats::{derive_seed, median, non_decreasing, spearman, strictly_decreasing, strictly_increasing};
use super::{shift_seed, Check, ExperimentConfig, ExperimentReport, Table};
use crate::data::{sample_indices, Dataset};
use crate::error::{Error, Result};
use crate::gep::{gep_train, GepConfig, GepStepTrace};
use crate::gsd::{gsd_from_gradients, gsd_trajectory, SgdConfig};
use crate::linalg::{dot, orthonormalize, projection_metric, spectral_norm, svd, symmetric_eigen, top_k_svd, Matrix, Subspace};
use crate::models::{init_model, mean_gradient, per_sample_gradients, zero_model, ModelParams, ModelSpec};
use crate::privacy::{clip_rows, dp_gsd_from_gradients, dp_pca_with_method, required_sample_size, CloseApprox, DpPcaDiagnostics, PrivacyParams, SampleMethod};
use crate::synth::{make_shifted_public, make_task, ShiftSpec, Task, TaskSpec};

/// Slack allowed on `r ≤ √2·s₁·d + s_{k+1}`.
pub const LEMMA1_SLACK: f64 = 1e-8;
pub const ORDERING_THRESHOLD: f64 = 0.9;
pub const SPECTRUM_THRESHOLD: f64 = 0.9;
pub const UTILITY_THRESHOLD: f64 = 0.9;
/// Allowance for Monte-Carlo error on the closeness coverage.
pub const COVERAGE_SLACK: f64 = 0.05;

fn to_values<T: Serialize>(records: &[T]) -> Result<Vec<Value>> {
    records.iter().map(|r| serde_json::to_value(r).map_err(Error::from)).collect()
}

fn seeded_task(spec: &TaskSpec, seed: u64) -> Result<Task> {
    make_task(&TaskSpec { seed: derive_seed(&[spec.seed, seed]), ..spec.clone() })
}

/// Zero weights for convex models, seeded random weights otherwise.
fn start_model(spec: &ModelSpec, seed: u64) -> Result<ModelParams<f64>> {
    if spec.is_convex() {
        zero_model(spec)
    } else {
        init_model(spec, seed)
    }
}

fn publics(task: &Task, shifts: &[ShiftSpec], seed: u64) -> Result<Vec<Dataset>> {
    shifts.iter().map(|s| make_shifted_public(&task.public, s, &task.plane, shift_seed(seed, s))).collect()
}

// ---------------------------------------------------------------- monotonicity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftOutcome {
    pub shift: ShiftSpec,
    pub gsd: f64,
    pub gsd_normalized: f64,
    pub accuracy: f64,
    pub averaged_accuracy: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicitySeed {
    pub seed: u64,
    pub outcomes: Vec<ShiftOutcome>,
    /// Rank correlation of `−gsd` with test accuracy across shifts.
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityAggregates {
    pub shifts: Vec<ShiftSpec>,
    pub median_gsd: Vec<f64>,
    pub median_accuracy: Vec<f64>,
    pub median_spearman: Option<f64>,
    pub spearman_of_medians: Option<f64>,
}

/// GSD at the starting weights and final GEP test accuracy for each public variant.
pub fn run_monotonicity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let task_spec = cfg.task.as_ref().ok_or_else(|| Error::InvalidConfig("task missing".into()))?;
    let gep = cfg.gep.as_ref().ok_or_else(|| Error::InvalidConfig("gep missing".into()))?;
    let privacy = cfg.privacy.as_ref().ok_or_else(|| Error::InvalidConfig("privacy missing".into()))?;
    let shifts = cfg.sorted_shifts();
    let model_spec = cfg.model_for(task_spec);
    let k = cfg.options.k.unwrap_or(1);

    let records: Vec<MonotonicitySeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let task = seeded_task(task_spec, seed)?;
            let model0 = start_model(&model_spec, seed)?;
            let g_priv = per_sample_gradients(&model0, &task.train.as_batch())?;
            let gep_seed = GepConfig { seed: derive_seed(&[gep.seed, seed]), ..gep.clone() };
            let mut outcomes = Vec::with_capacity(shifts.len());
            for (shift, public) in shifts.iter().zip(publics(&task, &shifts, seed)?) {
                let g_pub = per_sample_gradients(&model0, &public.as_batch())?;
                let report = gsd_from_gradients(&g_priv, &g_pub, k)?.report;
                let res = gep_train(&task.train, &public, Some(&task.test), &model0, &gep_seed, privacy)?;
                let acc = |m: Option<crate::models::Metrics>| m.map_or(f64::NAN, |m| m.accuracy);
                outcomes.push(ShiftOutcome {
                    shift: *shift,
                    gsd: report.distance_raw,
                    gsd_normalized: report.distance_normalized,
                    accuracy: acc(res.test_metrics),
                    averaged_accuracy: acc(res.averaged_test_metrics),
                    final_train_loss: res.train_metrics.loss,
                });
            }
            let neg_gsd: Vec<f64> = outcomes.iter().map(|o| -o.gsd).collect();
            let accs: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
            Ok(MonotonicitySeed { seed, spearman: spearman(&neg_gsd, &accs), outcomes })
        })
        .collect::<Result<_>>()?;

    let col = |f: fn(&ShiftOutcome) -> f64| -> Vec<f64> {
        (0..shifts.len()).map(|j| median(&records.iter().map(|r| f(&r.outcomes[j])).collect::<Vec<_>>()).unwrap_or(f64::NAN)).collect()
    };
    let median_gsd = col(|o| o.gsd);
    let median_accuracy = col(|o| o.accuracy);
    let rhos: Vec<f64> = records.iter().filter_map(|r| r.spearman).collect();
    let median_spearman = median(&rhos);
    let neg: Vec<f64> = median_gsd.iter().map(|g| -g).collect();
    let agg = MonotonicityAggregates {
        spearman_of_medians: spearman(&neg, &median_accuracy),
        shifts: shifts.clone(),
        median_gsd: median_gsd.clone(),
        median_accuracy: median_accuracy.clone(),
        median_spearman,
    };
    let mut warnings = Vec::new();
    if shifts.len() < 2 {
        warnings.push("rank correlation needs at least two shifts; reported as null".to_string());
    } else if rhos.len() < records.len() {
        warnings.push(format!("{} seed(s) had constant distances or accuracies", records.len() - rhos.len()));
    }
    let many = shifts.len() >= 2;
    let checks = vec![
        Check::holds("gsd_strictly_increasing", many.then(|| strictly_increasing(&median_gsd))),
        Check::holds("accuracy_strictly_decreasing", many.then(|| strictly_decreasing(&median_accuracy))),
        Check::at_least("median_spearman", median_spearman, 1.0),
    ];
    let mut table = Table {
        name: "shifts".into(),
        header: ["seed", "shift_index", "magnitude", "gsd", "accuracy"].map(String::from).to_vec(),
        rows: vec![],
    };
    for r in &records {
        for (j, o) in r.outcomes.iter().enumerate() {
            table.rows.push(vec![r.seed as f64, j as f64, o.shift.magnitude, o.gsd, o.accuracy]);
        }
    }
    Ok(ExperimentReport::new(cfg, to_values(&records)?, serde_json::to_value(agg)?, checks, warnings, vec![table]))
}

// ---------------------------------------------------------- ordering stability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSeed {
    pub seed: u64,
    pub order_agreement: f64,
    pub initial_distances: Vec<f64>,
    pub final_distances: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingAggregates {
    pub shifts: Vec<ShiftSpec>,
    pub median_agreement: f64,
    pub min_agreement: f64,
}

/// Distance ordering of the public variants along a plain SGD run.
pub fn run_ordering_stability(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let task_spec = cfg.task.as_ref().ok_or_else(|| Error::InvalidConfig("task missing".into()))?;
    let shifts = cfg.sorted_shifts();
    let model_spec = cfg.model_for(task_spec);
    let o = &cfg.options;
    let k = o.k.unwrap_or(1);

    let results: Vec<(OrderingSeed, Vec<Vec<f64>>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let task = seeded_task(task_spec, seed)?;
            let pubs: Vec<_> = publics(&task, &shifts, seed)?.iter().map(Dataset::as_batch).collect();
            let model0 = start_model(&model_spec, seed)?;
            let sgd = SgdConfig {
                learning_rate: o.learning_rate.unwrap_or(0.5),
                steps: o.steps.unwrap_or(200),
                batch_size: o.batch_size.unwrap_or(64),
                seed: derive_seed(&[seed, 1]),
            };
            let traj = gsd_trajectory(&task.train, &pubs, &model0, k, &sgd)?;
            let dists: Vec<Vec<f64>> = traj.steps.iter().map(|s| s.distances()).collect();
            let rec = OrderingSeed {
                seed,
                order_agreement: traj.order_agreement,
                initial_distances: dists[0].clone(),
                final_distances: dists[dists.len() - 1].clone(),
                steps: dists.len(),
            };
            Ok((rec, dists))
        })
        .collect::<Result<_>>()?;

    let agreements: Vec<f64> = results.iter().map(|(r, _)| r.order_agreement).collect();
    let agg = OrderingAggregates {
        shifts: shifts.clone(),
        median_agreement: median(&agreements).unwrap_or(f64::NAN),
        min_agreement: agreements.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let checks = vec![Check::at_least("median_order_agreement", Some(agg.median_agreement), ORDERING_THRESHOLD)];
    let mut header = vec!["seed".to_string(), "step".to_string()];
    header.extend((0..shifts.len()).map(|j| format!("gsd_{j}")));
    let mut table = Table { name: "trajectory".into(), header, rows: vec![] };
    for (r, dists) in &results {
        for (t, d) in dists.iter().enumerate() {
            let mut row = vec![r.seed as f64, t as f64];
            row.extend(d);
            table.rows.push(row);
        }
    }
    let records: Vec<OrderingSeed> = results.into_iter().map(|(r, _)| r).collect();
    Ok(ExperimentReport::new(cfg, to_values(&records)?, serde_json::to_value(agg)?, checks, vec![], vec![table]))
}

// ------------------------------------------------------------------ lemma audit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSeed {
    pub seed: u64,
    pub instances: usize,
    pub violations: usize,
    /// Largest `r − d` seen (negative when the bound always had room).
    pub max_excess: f64,
    pub gep_steps: usize,
    pub gep_violations: usize,
    pub gep_max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditAggregates {
    pub instances: usize,
    pub gep_steps: usize,
    pub violations: usize,
    pub max_excess: f64,
}

/// `(r, d)` for one gradient matrix and one subspace.
pub fn lemma1_pair(g: &Matrix<f64>, v: &Subspace<f64>) -> Result<(f64, f64)> {
    let k = v.dim();
    let full = svd(g)?;
    let s1 = full.singular_values[0];
    let sk1 = full.singular_values.get(k).copied().unwrap_or(0.0);
    let d = projection_metric(&full.truncate(k).right, v)?;
    let r = spectral_norm(&g.sub(&g.matmul(v.basis())?.matmul_t(v.basis())?)?)?;
    Ok((r, std::f64::consts::SQRT_2 * s1 * d + sk1))
}

fn random_instance(seed: u64, i: usize) -> Result<(Matrix<f64>, Subspace<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, i as u64]));
    let m = rng.random_range(1..=30);
    let p = rng.random_range(1..=30);
    let k = rng.random_range(1..=m.min(p));
    let decay: f64 = rng.random_range(0.0..1.0);
    let scale = 10f64.powf(rng.random_range(-1.0..1.0));
    let g = Matrix::from_fn(m, p, |_, j| scale * (-decay * j as f64).exp() * rng.sample::<f64, _>(StandardNormal));
    let mut gauss = |r, c| Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = match i % 3 {
        0 => orthonormalize(&gauss(p, k))?,
        1 => {
            let eps = 10f64.powf(-6.0 * (i as f64 * 0.618_034).fract());
            let noisy = g.add(&gauss(m, p).scale(eps * scale))?;
            top_k_svd(&noisy, k)?.right
        }
        _ => top_k_svd(&g, k)?.right,
    };
    Ok((g, v))
}

fn trace_excess(trace: &[GepStepTrace]) -> (usize, f64) {
    let ex: Vec<f64> = trace.iter().map(|t| t.reconstruction_error - t.lemma1_bound).collect();
    (ex.iter().filter(|&&e| e > LEMMA1_SLACK).count(), ex.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Checks `r ≤ √2·s₁·gsd + s_{k+1}` on random instances and on GEP training traces.
pub fn run_lemma1_audit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let instances = cfg.options.instances.unwrap_or(1000);
    let records: Vec<AuditSeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let excess: Vec<f64> = (0..instances)
                .into_par_iter()
                .map(|i| {
                    let (g, v) = random_instance(seed, i)?;
                    lemma1_pair(&g, &v).map(|(r, d)| r - d)
                })
                .collect::<Result<_>>()?;
            let (mut gep_steps, mut gep_violations, mut gep_max) = (0, 0, f64::NEG_INFINITY);
            if let (Some(task_spec), Some(gep), Some(privacy)) = (&cfg.task, &cfg.gep, &cfg.privacy) {
                let task = seeded_task(task_spec, seed)?;
                let model0 = start_model(&cfg.model_for(task_spec), seed)?;
                let gep = GepConfig { seed: derive_seed(&[gep.seed, seed]), ..gep.clone() };
                let mut pubs = vec![task.public.clone()];
                pubs.extend(publics(&task, &cfg.sorted_shifts(), seed)?);
                for public in &pubs {
                    let res = gep_train(&task.train, public, None, &model0, &gep, privacy)?;
                    let (v, mx) = trace_excess(&res.trace);
                    gep_steps += res.trace.len();
                    gep_violations += v;
                    gep_max = gep_max.max(mx);
                }
            }
            Ok(AuditSeed {
                seed,
                instances,
                violations: excess.iter().filter(|&&e| e > LEMMA1_SLACK).count(),
                max_excess: excess.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                gep_steps,
                gep_violations,
                gep_max_excess: gep_max,
            })
        })
        .collect::<Result<_>>()?;
    let agg = AuditAggregates {
        instances: records.iter().map(|r| r.instances).sum(),
        gep_steps: records.iter().map(|r| r.gep_steps).sum(),
        violations: records.iter().map(|r| r.violations + r.gep_violations).sum(),
        max_excess: records.iter().map(|r| r.max_excess.max(r.gep_max_excess)).fold(f64::NEG_INFINITY, f64::max),
    };
    let checks = vec![Check::at_most("violations", Some(agg.violations as f64), 0.0)];
    Ok(ExperimentReport::new(cfg, to_values(&records)?, serde_json::to_value(agg)?, checks, vec![], vec![]))
}

// -------------------------------------------------------------------- spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCheckpoint {
    pub step: usize,
    pub energy_ratio: f64,
    /// Singular values divided by the largest.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeed {
    pub seed: u64,
    pub p: usize,
    pub checkpoints: Vec<SpectrumCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAggregates {
    pub k: usize,
    pub min_energy_ratio: f64,
    pub median_energy_ratio: f64,
}

/// `Σ_{i<k} sᵢ² / Σ sᵢ²`, 1 for a zero matrix.
pub fn energy_ratio(singular_values: &[f64], k: usize) -> f64 {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 1.0;
    }
    singular_values.iter().take(k).map(|s| s * s).sum::<f64>() / total
}

/// Singular-value profiles of per-example gradient matrices along plain SGD.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let task_spec = cfg.task.as_ref().ok_or_else(|| Error::InvalidConfig("task missing".into()))?;
    let model_spec = cfg.model_for(task_spec);
    let o = &cfg.options;
    let k = o.k.unwrap_or(16);
    let steps = o.steps.unwrap_or(100);
    let n_check = o.checkpoints.unwrap_or(5).max(1);
    let lr = o.learning_rate.unwrap_or(0.5);
    let batch = o.batch_size.unwrap_or(256);
    let at: Vec<usize> = if n_check == 1 { vec![0] } else { (0..n_check).map(|i| i * steps / (n_check - 1)).collect() };

    let records: Vec<SpectrumSeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let task = seeded_task(task_spec, seed)?;
            let eval = task.train.head(batch);
            let mut model = start_model(&model_spec, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 2]));
            let mut checkpoints = Vec::new();
            for t in 0..=steps {
                if at.contains(&t) {
                    let s = svd(&per_sample_gradients(&model, &eval)?)?.singular_values;
                    let top = s.first().copied().unwrap_or(0.0);
                    checkpoints.push(SpectrumCheckpoint {
                        step: t,
                        energy_ratio: energy_ratio(&s, k),
                        profile: s.iter().map(|x| if top > 0.0 { x / top } else { 0.0 }).collect(),
                    });
                }
                if t < steps {
                    let mb = task.train.subset(&sample_indices(&mut rng, task.train.len(), batch));
                    model.step(lr, &mean_gradient(&model, &mb)?);
                }
            }
            Ok(SpectrumSeed { seed, p: model.param_count(), checkpoints })
        })
        .collect::<Result<_>>()?;

    let ratios: Vec<f64> = records.iter().flat_map(|r| r.checkpoints.iter().map(|c| c.energy_ratio)).collect();
    let agg = SpectrumAggregates {
        k,
        min_energy_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        median_energy_ratio: median(&ratios).unwrap_or(f64::NAN),
    };
    let mut warnings = Vec::new();
    if records.iter().any(|r| r.p <= k) {
        warnings.push(format!("parameter count does not exceed k = {k}; the energy ratio is trivially 1"));
    }
    let checks = vec![Check::at_least("min_energy_ratio", Some(agg.min_energy_ratio), SPECTRUM_THRESHOLD)];
    let mut table = Table {
        name: "profile".into(),
        header: ["seed", "step", "index", "relative_singular_value"].map(String::from).to_vec(),
        rows: vec![],
    };
    for r in &records {
        for c in &r.checkpoints {
            for (i, v) in c.profile.iter().enumerate() {
                table.rows.push(vec![r.seed as f64, c.step as f64, i as f64, *v]);
            }
        }
    }
    Ok(ExperimentReport::new(cfg, to_values(&records)?, serde_json::to_value(agg)?, checks, warnings, vec![table]))
}

// -------------------------------------------------------------- dppca utility

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySeed {
    pub seed: u64,
    /// `|⟨v̂, v_top⟩|` per sample size.
    pub alignments: Vec<f64>,
    pub eigengaps: Vec<f64>,
    pub methods: Vec<SampleMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityAggregates {
    pub sample_sizes: Vec<usize>,
    pub median_alignment: Vec<f64>,
    pub fallback_draws: usize,
}

/// Private top eigenvector quality against the exact one, across sample sizes.
pub fn run_dppca_utility(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let privacy = cfg.privacy.as_ref().ok_or_else(|| Error::InvalidConfig("privacy missing".into()))?;
    let o = &cfg.options;
    let p = o.dim.unwrap_or(20);
    let spike = o.spike.unwrap_or_default();
    spike.validate()?;
    let sizes = if o.sample_sizes.is_empty() { vec![100, 1000, 10000] } else { o.sample_sizes.clone() };
    if p < 2 || sizes.contains(&0) {
        return Err(Error::InvalidConfig("dim must be at least 2 and sample sizes positive".into()));
    }
    let c = privacy.clip_norm;

    let records: Vec<UtilitySeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let frame = random_frame(p, derive_seed(&[seed, 0]))?;
            let mut rec = UtilitySeed { seed, alignments: vec![], eigengaps: vec![], methods: vec![] };
            for &m in &sizes {
                let g = clip_rows(&spiked_gradients(m, &frame, &spike, derive_seed(&[seed, m as u64])), c);
                let a = g.t_matmul(&g)?.scale(1.0 / m as f64);
                let eig = symmetric_eigen(&a)?;
                let v_top = eig.vectors.column(0);
                let (v, method) = dp_pca_with_method(&g, privacy.epsilon, c, derive_seed(&[seed, m as u64, 1]))?;
                rec.alignments.push(dot(&v.vector(0), &v_top).abs());
                rec.eigengaps.push(eig.values[0] - eig.values[1]);
                rec.methods.push(method);
            }
            Ok(rec)
        })
        .collect::<Result<_>>()?;

    let median_alignment: Vec<f64> = (0..sizes.len())
        .map(|j| median(&records.iter().map(|r| r.alignments[j]).collect::<Vec<_>>()).unwrap_or(f64::NAN))
        .collect();
    let fallback_draws = records.iter().flat_map(|r| &r.methods).filter(|&&m| m == SampleMethod::Gibbs).count();
    let checks = vec![
        Check::holds("median_alignment_non_decreasing", Some(non_decreasing(&median_alignment))),
        Check::at_least("median_alignment_at_largest_m", median_alignment.last().copied(), UTILITY_THRESHOLD),
    ];
    let mut warnings = Vec::new();
    if fallback_draws > 0 {
        warnings.push(format!("{fallback_draws} draw(s) used the Gibbs fallback"));
    }
    let agg = UtilityAggregates { sample_sizes: sizes, median_alignment, fallback_draws };
    Ok(ExperimentReport::new(cfg, to_values(&records)?, serde_json::to_value(agg)?, checks, warnings, vec![]))
}

// ------------------------------------------------------------ dpgsd closeness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessSeed {
    pub seed: u64,
    /// `|d̂ − d|` per trial.
    pub errors: Vec<f64>,
    pub covered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessAggregates {
    pub m: usize,
    pub m_public: usize,
    pub required_m: f64,
    pub trials: usize,
    pub coverage: f64,
    pub median_error: f64,
    pub target_coverage: f64,
}

/// Coverage of `|d̂ − d| ≤ ρ` with the private sample size set from the bound.
pub fn run_dpgsd_closeness(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let privacy: &PrivacyParams = cfg.privacy.as_ref().ok_or_else(|| Error::InvalidConfig("privacy missing".into()))?;
    let o = &cfg.options;
    let p = o.dim.unwrap_or(20);
    let spike = o.spike.unwrap_or_default();
    spike.validate()?;
    let close = CloseApprox::new(o.rho.unwrap_or(0.5), o.eta.unwrap_or(0.1))?;
    let angle = o.public_angle.unwrap_or(std::f64::consts::FRAC_PI_6);
    let trials = o.trials.unwrap_or(100).max(1);
    let diag = DpPcaDiagnostics { top_eigenvalue: spike.top_eigenvalue(), eigengap: spike.eigengap(), p, m: 0 };
    let required_m = required_sample_size(&diag, close, privacy.epsilon, privacy.clip_norm)?;
    let m = required_m.ceil() as usize;
    let m_pub = o.public_size.unwrap_or(m);

    let records: Vec<ClosenessSeed> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let errors: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let s = |tag: u64| derive_seed(&[seed, t as u64, tag]);
                    let frame = random_frame(p, s(0))?;
                    let g_priv = spiked_gradients(m, &frame, &spike, s(1));
                    let g_pub = spiked_gradients(m_pub, &tilt(&frame, angle), &spike, s(2));
                    let d = gsd_from_gradients(&g_priv, &g_pub, 1)?.report.distance_raw;
                    let d_hat = dp_gsd_from_gradients(&g_priv, &g_pub, privacy, s(3))?.report.distance_raw;
                    Ok((d_hat - d).abs())
                })
                .collect::<Result<_>>()?;
            let covered = errors.iter().filter(|&&e| e <= close.rho).count();
            Ok(ClosenessSeed { seed, errors, covered })
        })
        .collect::<Result<_>>()?;

    let total = records.len() * trials;
    let covered: usize = records.iter().map(|r| r.covered).sum();
    let all: Vec<f64> = records.iter().flat_map(|r| r.errors.iter().copied()).collect();
    let target = 1.0 - close.eta - COVERAGE_SLACK;
    let agg = ClosenessAggregates {
        m,
        m_public: m_pub,
        required_m,
        trials: total,
        coverage: covered as f64 / total as f64,
        median_error: median(&all).unwrap_or(f64::NAN),
        target_coverage: target,
    };
    let checks = vec![Check::at_least("coverage", Some(agg.coverage), target)];
    Ok(ExperimentReport::new(cfg, to_values(&records)?, serde_json::to_value(agg)?, checks, vec![], vec![]))
}
