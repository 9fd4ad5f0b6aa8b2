//! Gradient subspace distance: per-example gradients of both batches at the
//! same weights, top-k right singular subspaces, projection metric between them.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{sample_indices, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{principal_angles, projection_metric, svd, Matrix, PrincipalAngles, Subspace, SvdResult};
use crate::models::{mean_gradient, per_sample_gradients, Batch, ModelParams};
use crate::scalar::Scalar;

/// Default subspace dimension.
pub const DEFAULT_K: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsdReport {
    pub k: usize,
    pub angles: PrincipalAngles,
    /// Projection metric, in `[0, √k]`.
    pub distance_raw: f64,
    /// `distance_raw / √k`, in `[0, 1]`.
    pub distance_normalized: f64,
    /// Every singular value of the private gradient matrix (not only the top k).
    pub priv_singular_values: Vec<f64>,
    pub pub_singular_values: Vec<f64>,
    pub m_priv: usize,
    pub m_pub: usize,
    pub p: usize,
}

/// Report plus the two subspaces it was computed from.
#[derive(Debug, Clone)]
pub struct GsdDetail<T> {
    pub report: GsdReport,
    pub priv_subspace: Subspace<T>,
    pub pub_subspace: Subspace<T>,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn check_k(k: usize, g_priv_shape: (usize, usize), g_pub_shape: (usize, usize)) -> Result<()> {
    if g_priv_shape.1 != g_pub_shape.1 {
        return Err(Error::DimMismatch(format!(
            "gradient matrices have {} and {} columns",
            g_priv_shape.1, g_pub_shape.1
        )));
    }
    let max = g_priv_shape.0.min(g_pub_shape.0).min(g_priv_shape.1);
    if k == 0 || k > max {
        return Err(Error::BadK { k, max });
    }
    Ok(())
}

fn top_subspace<T: Scalar>(full: &SvdResult<T>, k: usize) -> Subspace<T> {
    full.clone().truncate(k).right
}

fn assemble<T: Scalar>(
    k: usize,
    priv_svd: &SvdResult<T>,
    pub_svd: &SvdResult<T>,
    m_priv: usize,
    m_pub: usize,
) -> Result<GsdDetail<T>> {
    let v_priv = top_subspace(priv_svd, k);
    let v_pub = top_subspace(pub_svd, k);
    let angles = principal_angles(&v_priv, &v_pub)?;
    let distance_raw = projection_metric(&v_priv, &v_pub)?.to_f64_lossy();
    let report = GsdReport {
        k,
        angles,
        distance_raw,
        distance_normalized: distance_raw / (k as f64).sqrt(),
        priv_singular_values: to_f64(&priv_svd.singular_values),
        pub_singular_values: to_f64(&pub_svd.singular_values),
        m_priv,
        m_pub,
        p: v_priv.ambient_dim(),
    };
    Ok(GsdDetail { report, priv_subspace: v_priv, pub_subspace: v_pub })
}

/// GSD between two per-example gradient matrices with the same column count.
pub fn gsd_from_gradients<T: Scalar>(g_priv: &Matrix<T>, g_pub: &Matrix<T>, k: usize) -> Result<GsdDetail<T>> {
    check_k(k, g_priv.shape(), g_pub.shape())?;
    let priv_svd = svd(g_priv)?;
    let pub_svd = svd(g_pub)?;
    assemble(k, &priv_svd, &pub_svd, g_priv.rows(), g_pub.rows())
}

/// Gradient subspace distance of two batches at the given weights.
pub fn gsd<T: Scalar>(priv_batch: &Batch<T>, pub_batch: &Batch<T>, model: &ModelParams<T>, k: usize) -> Result<GsdReport> {
    gsd_detailed(priv_batch, pub_batch, model, k).map(|d| d.report)
}

pub fn gsd_detailed<T: Scalar>(
    priv_batch: &Batch<T>,
    pub_batch: &Batch<T>,
    model: &ModelParams<T>,
    k: usize,
) -> Result<GsdDetail<T>> {
    let g_priv = per_sample_gradients(model, priv_batch)?;
    let g_pub = per_sample_gradients(model, pub_batch)?;
    gsd_from_gradients(&g_priv, &g_pub, k)
}

/// One public candidate in a ranking; rank 1 is the recommended dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPublic {
    pub rank: usize,
    pub name: String,
    pub distance_raw: f64,
    pub distance_normalized: f64,
    /// Same distance as the previous entry; order between them is by name only.
    pub tied: bool,
}

/// Ascending by raw distance, ties broken by name.
pub fn rank_publics<S: AsRef<str>>(reports: &[(S, GsdReport)]) -> Vec<RankedPublic> {
    let mut items: Vec<(&str, &GsdReport)> = reports.iter().map(|(n, r)| (n.as_ref(), r)).collect();
    items.sort_by(|a, b| {
        a.1.distance_raw
            .partial_cmp(&b.1.distance_raw)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let mut out: Vec<RankedPublic> = Vec::with_capacity(items.len());
    for (i, (name, r)) in items.into_iter().enumerate() {
        let tied = out.last().is_some_and(|prev| prev.distance_raw == r.distance_raw);
        out.push(RankedPublic {
            rank: i + 1,
            name: name.to_string(),
            distance_raw: r.distance_raw,
            distance_normalized: r.distance_normalized,
            tied,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub iteration: usize,
    /// One report per public batch, in input order.
    pub reports: Vec<GsdReport>,
}

impl TrajectoryStep {
    pub fn distances(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.distance_raw).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub steps: Vec<TrajectoryStep>,
    /// Fraction of steps whose ordering of the public batches matches step 0.
    pub order_agreement: f64,
}

/// `true` when every pair of entries compares the same way in both lists.
pub fn same_ordering(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (i + 1..a.len()).all(|j| a[i].partial_cmp(&a[j]) == b[i].partial_cmp(&b[j])))
}

/// Runs plain minibatch SGD on the private task and, before each update,
/// measures the distance from the current private minibatch to every public
/// batch at the current weights.
pub fn gsd_trajectory(
    priv_train: &Dataset,
    publics: &[Batch<f64>],
    model0: &ModelParams<f64>,
    k: usize,
    sgd: &SgdConfig,
) -> Result<TrajectoryReport> {
    if publics.len() < 2 {
        return Err(Error::InvalidConfig("trajectory needs at least two public batches".into()));
    }
    if sgd.steps == 0 || sgd.batch_size == 0 {
        return Err(Error::InvalidConfig("sgd steps and batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sgd.seed);
    let mut model = model0.clone();
    let mut steps = Vec::with_capacity(sgd.steps);
    for t in 0..sgd.steps {
        let idx = sample_indices(&mut rng, priv_train.len(), sgd.batch_size);
        let batch = priv_train.subset(&idx);
        let g_priv = per_sample_gradients(&model, &batch)?;
        let priv_svd = svd(&g_priv)?;
        let reports = publics
            .par_iter()
            .map(|pb| {
                let g_pub = per_sample_gradients(&model, pb)?;
                check_k(k, g_priv.shape(), g_pub.shape())?;
                let pub_svd = svd(&g_pub)?;
                Ok(assemble(k, &priv_svd, &pub_svd, g_priv.rows(), g_pub.rows())?.report)
            })
            .collect::<Result<Vec<_>>>()?;
        steps.push(TrajectoryStep { iteration: t, reports });
        let grad = mean_gradient(&model, &batch)?;
        model.step(sgd.learning_rate, &grad);
    }
    let reference = steps[0].distances();
    let agree = steps.iter().filter(|s| same_ordering(&reference, &s.distances())).count();
    Ok(TrajectoryReport { order_agreement: agree as f64 / steps.len() as f64, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{zero_model, ModelSpec};

    fn report(d: f64) -> GsdReport {
        GsdReport {
            k: 1,
            angles: PrincipalAngles(vec![d.asin()]),
            distance_raw: d,
            distance_normalized: d,
            priv_singular_values: vec![],
            pub_singular_values: vec![],
            m_priv: 1,
            m_pub: 1,
            p: 1,
        }
    }

    #[test]
    fn ranking_prefers_smallest_distance() {
        let r = rank_publics(&[("near", report(0.24)), ("far", report(0.28)), ("nearest", report(0.20))]);
        let names: Vec<_> = r.iter().map(|x| x.name.as_str()).collect();
        assert_eq!(names, ["nearest", "near", "far"]);
        assert_eq!(r[0].rank, 1);
    }

    #[test]
    fn ranking_ties_and_singletons() {
        let r = rank_publics(&[("b", report(0.5)), ("a", report(0.5))]);
        assert_eq!(r[0].name, "a");
        assert!(!r[0].tied && r[1].tied);
        let one = rank_publics(&[("only", report(0.1))]);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].name, "only");
    }

    #[test]
    fn identical_batches_have_zero_distance() {
        let spec = ModelSpec::softmax(3, 3);
        let model = crate::models::init_model::<f64>(&spec, 3).unwrap();
        let f = Matrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0 - 0.4);
        let b = Batch::new(f, (0..10).map(|i| (i % 3) as f64).collect()).unwrap();
        let r = gsd(&b, &b, &model, 4).unwrap();
        assert!(r.distance_raw < 1e-8);
        assert_eq!(r.angles.len(), 4);
        assert!((r.distance_normalized - r.distance_raw / 2.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_single_examples() {
        // linear regression at zero: gradient row = -y·(x, 1)
        let model = zero_model::<f64>(&ModelSpec::linear_regression(2)).unwrap();
        let a = Batch::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![1.0]).unwrap();
        let c = Batch::new(Matrix::from_rows(&[vec![-1.0, 0.0]]).unwrap(), vec![1.0]).unwrap();
        // rows -(1,0,1) and -(-1,0,1) are orthogonal
        assert!((gsd(&a, &c, &model, 1).unwrap().distance_raw - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_k() {
        let model = zero_model::<f64>(&ModelSpec::linear_regression(2)).unwrap();
        let a = Batch::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![1.0]).unwrap();
        assert!(matches!(gsd(&a, &a, &model, 2), Err(Error::BadK { .. })));
        assert!(matches!(gsd(&a, &a, &model, 0), Err(Error::BadK { .. })));
    }

    #[test]
    fn ordering_comparison() {
        assert!(same_ordering(&[0.1, 0.5, 0.3], &[0.2, 0.9, 0.4]));
        assert!(!same_ordering(&[0.1, 0.5, 0.3], &[0.2, 0.3, 0.4]));
    }
}
