//! Measurements shared by the oracle tests and the acceptance runner.

use super::*;
use gsdlab::linalg::Matrix;
use gsdlab::models::{init_model, per_sample_gradients, Activation, Batch, ModelParams, ModelSpec};
use gsdlab::privacy::{BinghamSampler, SampleMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn random_label<R: Rng>(rng: &mut R, spec: &ModelSpec) -> f64 {
    if spec.is_classifier() {
        rng.random_range(0..spec.num_classes) as f64
    } else {
        rng.random_range(-2.0..2.0)
    }
}

pub fn gradient_cases() -> Vec<ModelSpec> {
    vec![
        ModelSpec::linear_regression(4),
        ModelSpec::logistic(5),
        ModelSpec::softmax(3, 4),
        ModelSpec::mlp(3, vec![5], 3, Activation::Tanh),
        ModelSpec::mlp(4, vec![4, 3], 2, Activation::Relu),
    ]
}

/// Worst relative error `‖g − fd‖/‖fd‖` over 50 random (model, example) pairs.
pub fn worst_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = gradient_cases();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let spec = &specs[i % specs.len()];
        let mut model: ModelParams<f64> = init_model(spec, rng.random()).unwrap();
        model.theta.iter_mut().for_each(|t| *t += rng.random_range(-0.5..0.5));
        let x: Vec<f64> = (0..spec.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = random_label(&mut rng, spec);
        let batch = Batch::new(Matrix::from_rows(&[x.clone()]).unwrap(), vec![y]).unwrap();
        let g = per_sample_gradients(&model, &batch).unwrap();
        let fd = finite_difference_gradient(&model, &x, y, 1e-5);
        let err: f64 = g.row(0).iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(err / norm.max(1e-12));
    }
    worst
}

/// χ² statistic and its 0.999 critical value for draws of the angle on the
/// circle under density ∝ exp(κ cos²θ).
pub fn bingham_circle_chi2(kappa: f64, draws: usize, seed: u64) -> (f64, f64, usize) {
    const BINS: usize = 36;
    let sampler = BinghamSampler::new(&Matrix::diag(&[kappa, 0.0])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; BINS];
    let mut fallbacks = 0;
    let width = std::f64::consts::TAU / BINS as f64;
    for _ in 0..draws {
        let (v, method) = sampler.sample_with_method(&mut rng);
        if method == SampleMethod::Gibbs {
            fallbacks += 1;
        }
        let theta = v[1].atan2(v[0]).rem_euclid(std::f64::consts::TAU);
        counts[((theta / width) as usize).min(BINS - 1)] += 1;
    }
    let density = |t: f64| (kappa * t.cos().powi(2)).exp();
    let total = simpson(density, 0.0, std::f64::consts::TAU, 20_000);
    let expected: Vec<f64> =
        (0..BINS).map(|b| draws as f64 * simpson(density, b as f64 * width, (b + 1) as f64 * width, 200) / total).collect();
    let critical = ChiSquared::new((BINS - 1) as f64).unwrap().inverse_cdf(0.999);
    (chi_square(&counts, &expected), critical, fallbacks)
}

/// KS p-value of the first coordinate of uniform draws on S², which is U(−1, 1).
pub fn bingham_uniform_ks(draws: usize, seed: u64) -> f64 {
    let sampler = BinghamSampler::new(&Matrix::zeros(3, 3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..draws).map(|_| sampler.sample(&mut rng)[0]).collect();
    let d = ks_statistic(xs, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0));
    kolmogorov_tail(d * (draws as f64).sqrt())
}

