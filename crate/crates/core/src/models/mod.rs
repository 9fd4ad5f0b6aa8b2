//! Small differentiable models with per-example gradients.

mod network;
mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use network::Layout;

pub use spec::{Activation, ModelKind, ModelSpec};

/// Flat parameter vector of length `spec.param_count()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub spec: ModelSpec,
    pub theta: Vec<T>,
}

/// `m` examples: features `m × d` and one label per row.
///
/// Classification labels are class indices stored as reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub features: Matrix<T>,
    pub labels: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub loss: f64,
    /// Fraction of argmax-correct predictions; 0 for regression.
    pub accuracy: f64,
}

impl<T: Scalar> Batch<T> {
    pub fn new(features: Matrix<T>, labels: Vec<T>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimMismatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Batch<U> {
        Batch { features: self.features.cast(), labels: self.labels.iter().map(|y| U::lit(y.to_f64_lossy())).collect() }
    }

    /// Copy with labels replaced by uniform random classes (classification) or
    /// standard normal targets (regression).
    pub fn with_random_labels(&self, spec: &ModelSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = (0..self.len())
            .map(|_| {
                if spec.is_classifier() {
                    T::lit(rng.random_range(0..spec.num_classes) as f64)
                } else {
                    T::lit(rng.sample::<f64, _>(rand_distr::StandardNormal))
                }
            })
            .collect();
        Self { features: self.features.clone(), labels }
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(spec: ModelSpec, theta: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if theta.len() != spec.param_count() {
            return Err(Error::DimMismatch(format!(
                "spec needs {} parameters, got {}",
                spec.param_count(),
                theta.len()
            )));
        }
        Ok(Self { spec, theta })
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    fn check_batch(&self, batch: &Batch<T>) -> Result<()> {
        if batch.input_dim() != self.spec.input_dim {
            return Err(Error::DimMismatch(format!(
                "batch has {} features, model expects {}",
                batch.input_dim(),
                self.spec.input_dim
            )));
        }
        if batch.features.rows() != batch.labels.len() {
            return Err(Error::DimMismatch("feature/label count mismatch".into()));
        }
        if self.spec.is_classifier() {
            let classes = self.spec.num_classes as f64;
            for &y in &batch.labels {
                let v = y.to_f64_lossy();
                if v.fract() != 0.0 || v < 0.0 || v >= classes {
                    return Err(Error::DimMismatch(format!("label {v} outside 0..{classes}")));
                }
            }
        }
        Ok(())
    }

    /// `θ ← θ − step · direction`
    pub fn step(&mut self, step: T, direction: &[T]) {
        for (t, &d) in self.theta.iter_mut().zip(direction) {
            *t -= step * d;
        }
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams { spec: self.spec.clone(), theta: self.theta.iter().map(|x| U::lit(x.to_f64_lossy())).collect() }
    }
}

/// Weights uniform in `±1/sqrt(fan_in)`, biases zero; deterministic per seed.
pub fn init_model<T: Scalar>(spec: &ModelSpec, seed: u64) -> Result<ModelParams<T>> {
    spec.validate()?;
    let layout = Layout::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![T::zero(); spec.param_count()];
    for l in 0..layout.layers() {
        let (n_in, n_out) = (layout.dims[l], layout.dims[l + 1]);
        let bound = 1.0 / (n_in as f64).sqrt();
        let off = layout.offsets[l];
        for w in &mut theta[off..off + n_in * n_out] {
            *w = T::lit(rng.random_range(-bound..bound));
        }
    }
    Ok(ModelParams { spec: spec.clone(), theta })
}

/// All-zero parameters.
pub fn zero_model<T: Scalar>(spec: &ModelSpec) -> Result<ModelParams<T>> {
    spec.validate()?;
    Ok(ModelParams { spec: spec.clone(), theta: vec![T::zero(); spec.param_count()] })
}

/// `m × p` matrix whose row `i` is `∇_θ ℓ(θ; xᵢ, yᵢ)`.
///
/// Rows are computed in parallel; each row is independent so the result does
/// not depend on scheduling.
pub fn per_sample_gradients<T: Scalar>(model: &ModelParams<T>, batch: &Batch<T>) -> Result<Matrix<T>> {
    model.check_batch(batch)?;
    let layout = Layout::new(&model.spec);
    let p = model.param_count();
    let mut out = Matrix::zeros(batch.len(), p);
    out.as_mut_slice().par_chunks_mut(p.max(1)).enumerate().for_each(|(i, row)| {
        network::backprop(&model.spec, &layout, &model.theta, batch.features.row(i), batch.labels[i], row);
    });
    Ok(out)
}

/// Gradient of the mean loss over the batch.
pub fn mean_gradient<T: Scalar>(model: &ModelParams<T>, batch: &Batch<T>) -> Result<Vec<T>> {
    let g = per_sample_gradients(model, batch)?;
    let m = T::lit(batch.len() as f64);
    Ok(g.t_matvec(&vec![T::one(); batch.len()])?.into_iter().map(|x| x / m).collect())
}

/// Loss of a single example.
pub fn example_loss<T: Scalar>(model: &ModelParams<T>, x: &[T], y: T) -> T {
    let layout = Layout::new(&model.spec);
    network::example_loss(&model.spec, &layout, &model.theta, x, y).0
}

/// Mean per-example loss and accuracy.
pub fn evaluate<T: Scalar>(model: &ModelParams<T>, batch: &Batch<T>) -> Result<Metrics> {
    model.check_batch(batch)?;
    if batch.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let layout = Layout::new(&model.spec);
    let per_example: Vec<(f64, bool)> = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            let y = batch.labels[i];
            let (loss, logits) = network::example_loss(&model.spec, &layout, &model.theta, batch.features.row(i), y);
            (loss.to_f64_lossy(), is_correct(model.spec.kind, &logits, y))
        })
        .collect();
    let m = batch.len() as f64;
    let loss = per_example.iter().map(|e| e.0).sum::<f64>() / m;
    let accuracy = if model.spec.is_classifier() {
        per_example.iter().filter(|e| e.1).count() as f64 / m
    } else {
        0.0
    };
    Ok(Metrics { loss, accuracy })
}

fn is_correct<T: Scalar>(kind: ModelKind, logits: &[T], y: T) -> bool {
    match kind {
        ModelKind::LinearRegression => false,
        ModelKind::LogisticRegression => (logits[0] > T::zero()) == (y > T::lit(0.5)),
        ModelKind::SoftmaxRegression | ModelKind::Mlp => {
            let mut best = 0;
            for (c, &v) in logits.iter().enumerate() {
                if v > logits[best] {
                    best = c;
                }
            }
            best == network::class_index(y)
        }
    }
}
