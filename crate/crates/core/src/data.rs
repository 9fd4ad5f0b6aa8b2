//! Labelled datasets and their CSV form: one example per row, features first,
//! label in the last column.

use std::path::Path;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{io, Matrix};
use crate::models::Batch;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix<f64>,
    pub labels: Vec<f64>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix<f64>, labels: Vec<f64>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimMismatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self { name: name.into(), features, labels, num_classes })
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

    pub fn as_batch(&self) -> Batch<f64> {
        Batch { features: self.features.clone(), labels: self.labels.clone() }
    }

    pub fn subset(&self, indices: &[usize]) -> Batch<f64> {
        Batch { features: self.features.select_rows(indices), labels: indices.iter().map(|&i| self.labels[i]).collect() }
    }

    /// First `m` examples (all of them if `m` exceeds the size).
    pub fn head(&self, m: usize) -> Batch<f64> {
        let idx: Vec<usize> = (0..m.min(self.len())).collect();
        self.subset(&idx)
    }

    /// Largest Euclidean feature norm.
    pub fn max_feature_norm(&self) -> f64 {
        self.features.row_iter().map(crate::linalg::norm2).fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> Matrix<f64> {
        let d = self.input_dim();
        Matrix::from_fn(self.len(), d + 1, |i, j| if j < d { self.features[(i, j)] } else { self.labels[i] })
    }

    pub fn from_matrix(name: impl Into<String>, m: &Matrix<f64>, num_classes: usize) -> Result<Self> {
        if m.cols() < 2 {
            return Err(Error::DimMismatch("dataset CSV needs at least one feature and a label column".into()));
        }
        let d = m.cols() - 1;
        let features = Matrix::from_fn(m.rows(), d, |i, j| m[(i, j)]);
        let labels = (0..m.rows()).map(|i| m[(i, d)]).collect();
        Self::new(name, features, labels, num_classes)
    }

    pub fn to_csv_string(&self) -> String {
        io::to_csv_string(&self.to_matrix())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_csv_file(&self.to_matrix(), path)
    }

    pub fn read_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<Self> {
        let path = path.as_ref();
        let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
        Self::from_matrix(name, &io::read_csv_file(path)?, num_classes)
    }
}

/// `batch` distinct indices drawn uniformly from `0..n` (all of `0..n`, in
/// order, when `batch ≥ n`).
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, batch: usize) -> Vec<usize> {
    if batch >= n {
        return (0..n).collect();
    }
    let mut idx = index::sample(rng, n, batch).into_vec();
    idx.sort_unstable();
    idx
}
