//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::checks::*;
use common::*;
use gsdlab::gep::{clipped_sgd_train, gep_train, GepConfig};
use gsdlab::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use gsdlab::linalg::{projection_metric, svd};
use gsdlab::models::{zero_model, ModelSpec};
use gsdlab::privacy::{gep_noise_scale, PrivacyParams};
use gsdlab::synth::{make_task, TaskSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn projection_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = rng.random_range(1..=64);
        let k = rng.random_range(1..=p.min(8));
        let (a, b) = (random_subspace(&mut rng, p, k), random_subspace(&mut rng, p, k));
        let d = projection_metric(&a, &b).unwrap();
        let half = 0.5 * frobenius_sq(&sub(&projector(&dense(a.basis())), &projector(&dense(b.basis()))));
        worst = worst.max((d * d - half).abs());
    }
    outcome(worst < 1e-9, format!("max |d² − ½‖Π₁−Π₂‖²| = {worst:.3e} (< 1e-9)"))
}

fn metric_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut asym, mut excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let p = rng.random_range(2..=32);
        let k = rng.random_range(1..=p.min(8));
        let (a, b, c) = (random_subspace(&mut rng, p, k), random_subspace(&mut rng, p, k), random_subspace(&mut rng, p, k));
        let ab = projection_metric(&a, &b).unwrap();
        asym = asym.max((ab - projection_metric(&b, &a).unwrap()).abs());
        excess = excess.max(ab - projection_metric(&a, &c).unwrap() - projection_metric(&c, &b).unwrap());
    }
    outcome(asym < 1e-9 && excess <= 1e-9, format!("max asymmetry {asym:.3e}, max triangle excess {excess:.3e} (≤ 1e-9)"))
}

fn eckart_young() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (m, p) = (rng.random_range(2..=40), rng.random_range(2..=16));
        let k = rng.random_range(1..m.min(p));
        let g = gaussian_matrix(&mut rng, m, p);
        let f = svd(&g).unwrap();
        let pi = projector(&dense(f.clone().truncate(k).right.basis()));
        let r = spectral_norm(&matmul(&dense(&g), &sub(&identity(p), &pi)));
        worst = worst.max((r - f.singular_values[k]).abs());
    }
    outcome(worst < 1e-8, format!("max |‖G(I−Π_k)‖₂ − s_(k+1)| = {worst:.3e} (< 1e-8)"))
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_file(config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn experiment(name: &str) -> ExperimentReport {
    run_experiment(&load(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn checks_line(r: &ExperimentReport) -> String {
    r.checks
        .iter()
        .map(|c| match c.value {
            Some(v) => format!("{} = {v:.4} (threshold {})", c.name, c.threshold),
            None => format!("{} = n/a", c.name),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn lemma1_audit() -> Outcome {
    let r = experiment("lemma1-audit.json");
    let instances = r.aggregates["instances"].as_u64().unwrap_or(0);
    let steps = r.aggregates["gep_steps"].as_u64().unwrap_or(0);
    let ok = r.passed && instances >= 1000 && steps > 0;
    outcome(ok, format!("{instances} instances + {steps} GEP steps; {}", checks_line(&r)))
}

fn gradients() -> Outcome {
    let worst = worst_gradient_error(104);
    outcome(worst < 1e-5, format!("max relative error {worst:.3e} over 50 pairs (< 1e-5)"))
}

fn bingham() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, kappa) in [0.0, 1.0, 5.0].into_iter().enumerate() {
        let (stat, critical, _) = bingham_circle_chi2(kappa, 100_000, 200 + i as u64);
        ok &= stat < critical;
        parts.push(format!("κ={kappa}: χ²={stat:.1}"));
    }
    let p = bingham_uniform_ks(100_000, 210);
    ok &= p > 0.001;
    outcome(ok, format!("{} (critical 66.6); KS p = {p:.3}", parts.join(", ")))
}

fn config_outcome(name: &str) -> Outcome {
    let r = experiment(name);
    outcome(r.passed, checks_line(&r))
}

fn gep_degeneracy() -> Outcome {
    let task = make_task(&TaskSpec {
        input_dim: 5,
        num_classes: 2,
        n_train: 400,
        n_test: 10,
        n_public: 100,
        margin: 2.0,
        noise: 1.0,
        seed: 105,
    })
    .unwrap();
    let spec = ModelSpec::logistic(5);
    let model = zero_model(&spec).unwrap();
    let p = model.theta.len();
    let cfg = GepConfig {
        k: p,
        power_iterations: 20,
        learning_rate: 0.5,
        iterations: Some(100),
        clip_embedding: 1e6,
        clip_residual: 1e6,
        sigma_embedding: Some(0.0),
        sigma_residual: Some(0.0),
        batch_size: 32,
        public_batch_size: None,
        seed: 106,
        allow_nonconvex: false,
    };
    let privacy = PrivacyParams::new(1.0, 1e-5, 1.0, 1).unwrap();
    let gep = gep_train(&task.train, &task.public, None, &model, &cfg, &privacy).unwrap();
    let sgd = clipped_sgd_train(&task.train, &model, 0.5, 100, 32, 1e6, 106).unwrap();
    let worst = gep.trace.iter().zip(&sgd.losses).map(|(a, b)| (a.train_loss - b).abs()).fold(0.0, f64::max);
    let ok = gep.trace.len() == 100 && sgd.losses.len() == 100 && worst < 1e-8;
    outcome(ok, format!("max per-step loss gap {worst:.3e} over {} steps (< 1e-8)", gep.trace.len()))
}

fn noise_golden() -> Outcome {
    // 2·sqrt(2·ln(1e5))/2 evaluated with 50-digit arithmetic.
    const REFERENCE: f64 = 4.798525912188081207567;
    let got = gep_noise_scale(&PrivacyParams::new(2.0, 1e-5, 1.0, 1).unwrap());
    let rel = (got - REFERENCE).abs() / REFERENCE;
    outcome(rel < 1e-12, format!("{got:.17} vs {REFERENCE:.17}, relative error {rel:.2e} (< 1e-12)"))
}

fn main() {
    let criteria: Vec<(&str, u64, Box<dyn Fn() -> Outcome>)> = vec![
        ("projection-metric identity", 5, Box::new(projection_identity)),
        ("metric axioms", 5, Box::new(metric_axioms)),
        ("eckart-young", 5, Box::new(eckart_young)),
        ("reconstruction bound audit", 30, Box::new(lemma1_audit)),
        ("gradient correctness", 10, Box::new(gradients)),
        ("bingham sampler", 60, Box::new(bingham)),
        ("dppca utility trend", 120, Box::new(|| config_outcome("dppca-utility.json"))),
        ("dp-gsd closeness", 120, Box::new(|| config_outcome("dpgsd-closeness.json"))),
        ("monotonicity", 300, Box::new(|| config_outcome("monotonicity-rotation.json"))),
        ("ordering stability", 120, Box::new(|| config_outcome("ordering-stability.json"))),
        ("spectrum", 60, Box::new(|| config_outcome("spectrum.json"))),
        ("gep degeneracy", 30, Box::new(gep_degeneracy)),
        ("noise calibration golden value", 5, Box::new(noise_golden)),
    ];
    let mut failures = 0;
    for (name, budget, run) in &criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let ok = out.ok && in_time;
        if !ok {
            failures += 1;
        }
        let timing = format!("{:.2}s/{budget}s{}", elapsed.as_secs_f64(), if in_time { "" } else { " OVER BUDGET" });
        println!("{} {name}: {} [{timing}]", if ok { "PASS" } else { "FAIL" }, out.detail);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
