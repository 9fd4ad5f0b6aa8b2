//! Synthetic classification tasks with controllable private/public shift.
//!
//! Features are a Gaussian class-conditional mixture in a random orthonormal
//! frame `u₁, …, u_d`. Class means sit in the `(u₁, u₂)` plane at distance
//! `margin/2` from the origin (`±u₁` for two classes); noise along `u_j` has
//! standard deviation `noise·0.7^j`, so `u₁, u₂` are the two highest-variance
//! directions. All splits are scaled by one common factor so that every
//! feature vector has `‖x‖₂ ≤ 1`.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, orthonormalize, Matrix};

const NOISE_DECAY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub input_dim: usize,
    #[serde(default = "two")]
    pub num_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_public: usize,
    pub margin: f64,
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn two() -> usize {
    2
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.input_dim < 2 {
            return bad("input_dim must be at least 2");
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2");
        }
        if self.n_train == 0 || self.n_test == 0 || self.n_public == 0 {
            return bad("n_train, n_test and n_public must be positive");
        }
        if !(self.margin.is_finite() && self.margin >= 0.0 && self.noise.is_finite() && self.noise >= 0.0) {
            return bad("margin and noise must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    Rotation,
    LabelFlip,
    FeatureMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    /// Radians for rotation, flip probability, or masked fraction.
    pub magnitude: f64,
}

impl ShiftSpec {
    pub fn rotation(angle: f64) -> Self {
        Self { kind: ShiftKind::Rotation, magnitude: angle }
    }

    pub fn label_flip(prob: f64) -> Self {
        Self { kind: ShiftKind::LabelFlip, magnitude: prob }
    }

    pub fn feature_mask(fraction: f64) -> Self {
        Self { kind: ShiftKind::FeatureMask, magnitude: fraction }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.magnitude;
        let ok = match self.kind {
            ShiftKind::Rotation => m.is_finite() && m.abs() <= 2.0 * PI,
            ShiftKind::LabelFlip | ShiftKind::FeatureMask => (0.0..=1.0).contains(&m),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadMagnitude { kind: self.label(), magnitude: m })
        }
    }

    /// Short name such as `rotation-0.5236`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            ShiftKind::Rotation => "rotation",
            ShiftKind::LabelFlip => "label-flip",
            ShiftKind::FeatureMask => "feature-mask",
        };
        format!("{kind}-{:.4}", self.magnitude)
    }
}

/// Orthonormal pair spanning the plane used by rotation shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationPlane {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl RotationPlane {
    pub fn new(u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        if u1.len() != u2.len() {
            return Err(Error::DimMismatch("plane vectors differ in length".into()));
        }
        let ortho = (norm2(&u1) - 1.0).abs() < 1e-10 && (norm2(&u2) - 1.0).abs() < 1e-10 && dot(&u1, &u2).abs() < 1e-10;
        if !ortho {
            return Err(Error::InvalidConfig("plane vectors must be orthonormal".into()));
        }
        Ok(Self { u1, u2 })
    }

    /// Rotates `x` by `angle` inside the plane, leaving the complement fixed.
    pub fn rotate(&self, x: &mut [f64], angle: f64) {
        let (a, b) = (dot(x, &self.u1), dot(x, &self.u2));
        let (s, c) = angle.sin_cos();
        let (na, nb) = (c * a - s * b, s * a + c * b);
        for ((xi, p), q) in x.iter_mut().zip(&self.u1).zip(&self.u2) {
            *xi += (na - a) * p + (nb - b) * q;
        }
    }
}

/// Disjoint train, test and public splits from one generator.
#[derive(Debug, Clone)]
pub struct Task {
    pub spec: TaskSpec,
    pub train: Dataset,
    pub test: Dataset,
    pub public: Dataset,
    pub plane: RotationPlane,
    /// Common factor applied to all features.
    pub scale: f64,
}

pub fn make_task(spec: &TaskSpec) -> Result<Task> {
    spec.validate()?;
    let d = spec.input_dim;
    let c = spec.num_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let frame = orthonormalize(&Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal)))?;
    let basis = frame.basis();
    let u: Vec<Vec<f64>> = (0..d).map(|j| basis.column(j)).collect();

    let means: Vec<Vec<f64>> = (0..c)
        .map(|k| {
            let (a, b) = if c == 2 {
                (if k == 1 { 1.0 } else { -1.0 }, 0.0)
            } else {
                let t = 2.0 * PI * k as f64 / c as f64;
                (t.cos(), t.sin())
            };
            (0..d).map(|i| 0.5 * spec.margin * (a * u[0][i] + b * u[1][i])).collect()
        })
        .collect();
    let sds: Vec<f64> = (0..d).map(|j| spec.noise * NOISE_DECAY.powi(j as i32)).collect();

    let n = spec.n_train + spec.n_test + spec.n_public;
    let mut x = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for r in 0..n {
        let label = rng.random_range(0..c);
        let row = x.row_mut(r);
        row.copy_from_slice(&means[label]);
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            for (xi, ui) in row.iter_mut().zip(&u[j]) {
                *xi += sds[j] * z * ui;
            }
        }
        y.push(label as f64);
    }
    let max_norm = x.row_iter().map(norm2).fold(0.0, f64::max);
    let scale = if max_norm > 1.0 { 1.0 / max_norm } else { 1.0 };
    x.as_mut_slice().iter_mut().for_each(|v| *v *= scale);

    let split = |name: &str, lo: usize, hi: usize| {
        let idx: Vec<usize> = (lo..hi).collect();
        Dataset::new(name, x.select_rows(&idx), y[lo..hi].to_vec(), c)
    };
    let (a, b) = (spec.n_train, spec.n_train + spec.n_test);
    Ok(Task {
        spec: spec.clone(),
        train: split("train", 0, a)?,
        test: split("test", a, b)?,
        public: split("public", b, n)?,
        plane: RotationPlane { u1: u[0].clone(), u2: u[1].clone() },
        scale,
    })
}

/// Applies `shift` to a copy of `ds`. Rotations use `plane`; `seed` drives
/// the random choices of label flips and masked coordinates.
pub fn make_shifted_public(ds: &Dataset, shift: &ShiftSpec, plane: &RotationPlane, seed: u64) -> Result<Dataset> {
    shift.validate()?;
    let mut out = ds.clone();
    out.name = format!("{}_{}", ds.name, shift.label());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match shift.kind {
        ShiftKind::Rotation => {
            if plane.u1.len() != ds.input_dim() {
                return Err(Error::DimMismatch(format!(
                    "rotation plane in R^{} but features in R^{}",
                    plane.u1.len(),
                    ds.input_dim()
                )));
            }
            if shift.magnitude != 0.0 {
                for i in 0..out.len() {
                    plane.rotate(out.features.row_mut(i), shift.magnitude);
                }
            }
        }
        ShiftKind::LabelFlip => {
            let c = ds.num_classes;
            for y in out.labels.iter_mut() {
                if rng.random::<f64>() < shift.magnitude {
                    let cur = *y as usize;
                    *y = if c == 2 {
                        (1 - cur) as f64
                    } else {
                        let other = rng.random_range(0..c - 1);
                        (if other >= cur { other + 1 } else { other }) as f64
                    };
                }
            }
        }
        ShiftKind::FeatureMask => {
            let d = ds.input_dim();
            let count = (shift.magnitude * d as f64).round() as usize;
            let cols = index::sample(&mut rng, d, count.min(d)).into_vec();
            for i in 0..out.len() {
                let row = out.features.row_mut(i);
                for &j in &cols {
                    row[j] = 0.0;
                }
            }
        }
    }
    Ok(out)
}

/// Task plus the public variants to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(flatten)]
    pub task: TaskSpec,
    #[serde(default)]
    pub shifts: Vec<ShiftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    pub seed: u64,
    pub shift: Option<ShiftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SynthSpec,
    pub scale: f64,
    pub plane: RotationPlane,
    pub datasets: Vec<ManifestEntry>,
}

/// Seed for the `i`-th public variant of a task.
pub fn shift_seed(task_seed: u64, i: usize) -> u64 {
    task_seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1))
}

/// Writes `train.csv`, `test.csv`, one `public_<i>.csv` per shift (a single
/// unshifted `public_0.csv` when there are none) and `manifest.json`.
pub fn write_task(spec: &SynthSpec, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let task = make_task(&spec.task)?;
    let s = &spec.task;
    let entry = |ds: &Dataset, file: &str, seed: u64, shift: Option<ShiftSpec>| ManifestEntry {
        name: ds.name.clone(),
        file: file.to_string(),
        n: ds.len(),
        d: ds.input_dim(),
        num_classes: ds.num_classes,
        seed,
        shift,
    };
    let mut datasets = Vec::new();
    task.train.write_csv(dir.join("train.csv"))?;
    datasets.push(entry(&task.train, "train.csv", s.seed, None));
    task.test.write_csv(dir.join("test.csv"))?;
    datasets.push(entry(&task.test, "test.csv", s.seed, None));
    if spec.shifts.is_empty() {
        task.public.write_csv(dir.join("public_0.csv"))?;
        datasets.push(entry(&task.public, "public_0.csv", s.seed, None));
    }
    for (i, shift) in spec.shifts.iter().enumerate() {
        let seed = shift_seed(s.seed, i);
        let ds = make_shifted_public(&task.public, shift, &task.plane, seed)?;
        let file = format!("public_{i}.csv");
        ds.write_csv(dir.join(&file))?;
        datasets.push(entry(&ds, &file, seed, Some(*shift)));
    }
    let manifest = Manifest { spec: spec.clone(), scale: task.scale, plane: task.plane, datasets };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
