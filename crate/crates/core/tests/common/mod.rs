#![allow(dead_code)]
//! Reference computations written against plain `Vec<Vec<f64>>`, sharing no
//! code with the library.

use gsdlab::linalg::{orthonormalize, Matrix, Subspace};
use gsdlab::models::{example_loss, ModelParams};
use rand::Rng;
use rand_distr::StandardNormal;

pub mod checks;

pub type Dense = Vec<Vec<f64>>;

pub fn dense(m: &Matrix<f64>) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn gram(a: &Dense) -> Dense {
    let p = a.first().map_or(0, Vec::len);
    let mut g = vec![vec![0.0; p]; p];
    for row in a {
        for i in 0..p {
            for j in 0..p {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}

/// Cyclic Jacobi rotations on a symmetric matrix. Eigenvalues descending,
/// eigenvectors as columns of the returned matrix.
pub fn jacobi_eigen(a: &Dense) -> (Vec<f64>, Dense) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Dense = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Singular values of `a` from the eigenvalues of `aᵀa`.
pub fn singular_values(a: &Dense) -> Vec<f64> {
    let (vals, _) = jacobi_eigen(&gram(a));
    vals.into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

pub fn spectral_norm(a: &Dense) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// `Σ_j b_j b_jᵀ` over the columns of `b` (assumed orthonormal).
pub fn projector(b: &Dense) -> Dense {
    let p = b.len();
    let k = b.first().map_or(0, Vec::len);
    (0..p).map(|i| (0..p).map(|j| (0..k).map(|c| b[i][c] * b[j][c]).sum()).collect()).collect()
}

pub fn frobenius_sq(a: &Dense) -> f64 {
    a.iter().flatten().map(|x| x * x).sum()
}

pub fn sub(a: &Dense, b: &Dense) -> Dense {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter().map(|r| (0..cols).map(|j| (0..inner).map(|l| r[l] * b[l][j]).sum()).collect()).collect()
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_subspace<R: Rng>(rng: &mut R, p: usize, k: usize) -> Subspace<f64> {
    orthonormalize(&gaussian_matrix(rng, p, k)).unwrap()
}

/// Central differences of the single-example loss in every parameter.
pub fn finite_difference_gradient(model: &ModelParams<f64>, x: &[f64], y: f64, h: f64) -> Vec<f64> {
    let mut m = model.clone();
    (0..model.theta.len())
        .map(|i| {
            let t = model.theta[i];
            m.theta[i] = t + h;
            let up = example_loss(&m, x, y);
            m.theta[i] = t - h;
            let down = example_loss(&m, x, y);
            m.theta[i] = t;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Pearson χ² statistic.
pub fn chi_square(observed: &[usize], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum()
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail `P(K > t)`.
pub fn kolmogorov_tail(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100).map(|k| {
        let k = k as f64;
        let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
        sign * (-2.0 * k * k * t * t).exp()
    }).sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// Path to a file under the workspace `configs/` directory.
pub fn config_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}
