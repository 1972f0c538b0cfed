//! Datasets: synthetic generation, CSV ingestion and feature normalization.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result};

/// A set of `d`-dimensional points, optionally with generating labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    points: Vec<Vec<f64>>,
    dim: usize,
    true_labels: Option<Vec<usize>>,
}

impl DataSet {
    /// Validates that there is at least one point and all share a dimension `d >= 1`.
    pub fn new(points: Vec<Vec<f64>>, true_labels: Option<Vec<usize>>) -> Result<Self> {
        let dim = check_rectangular(&points)?;
        if let Some(labels) = &true_labels {
            if labels.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    actual: labels.len(),
                });
            }
        }
        Ok(Self {
            points,
            dim,
            true_labels,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn true_labels(&self) -> Option<&[usize]> {
        self.true_labels.as_deref()
    }

    /// Returns a copy with every feature passed through [`normalize_features`].
    pub fn normalized(&self) -> Self {
        Self {
            points: normalize_features(&self.points).expect("non-empty by construction"),
            dim: self.dim,
            true_labels: self.true_labels.clone(),
        }
    }
}

/// Checks the point set is non-empty and rectangular; returns the dimension.
pub(crate) fn check_rectangular(points: &[Vec<f64>]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("point set is empty".into()))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidInput("points must have dimension >= 1".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
    }
    Ok(dim)
}

/// One Gaussian component of a [`BlobSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobComponent {
    pub mean: Vec<f64>,
    /// Row-major `d x d` covariance.
    pub covariance: Vec<Vec<f64>>,
    pub count: usize,
}

impl BlobComponent {
    /// Component with isotropic covariance `variance * I`.
    pub fn isotropic(mean: Vec<f64>, variance: f64, count: usize) -> Self {
        let d = mean.len();
        let covariance = (0..d)
            .map(|i| (0..d).map(|j| if i == j { variance } else { 0.0 }).collect())
            .collect();
        Self {
            mean,
            covariance,
            count,
        }
    }
}

/// Mixture of Gaussian blobs sampled by [`generate_blobs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub components: Vec<BlobComponent>,
    pub seed: u64,
}

/// Samples every component's points from its multivariate normal.
///
/// Points are emitted component by component; `true_labels` holds the
/// component index. The covariance square root comes from a symmetric
/// eigendecomposition, so singular (PSD) covariances are accepted.
pub fn generate_blobs(spec: &BlobSpec) -> Result<DataSet> {
    let first = spec
        .components
        .first()
        .ok_or_else(|| Error::InvalidInput("blob spec has no components".into()))?;
    let d = first.mean.len();
    if d == 0 {
        return Err(Error::InvalidInput("blob means must have dimension >= 1".into()));
    }

    let mut rng = seeded_rng(spec.seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (k, comp) in spec.components.iter().enumerate() {
        if comp.mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: comp.mean.len(),
            });
        }
        if comp.count == 0 {
            return Err(Error::InvalidInput(format!("blob component {k} has count 0")));
        }
        let root = covariance_root(&comp.covariance, d, k)?;
        let mean = DVector::from_column_slice(&comp.mean);
        for _ in 0..comp.count {
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = &mean + &root * z;
            points.push(x.iter().copied().collect());
            labels.push(k);
        }
    }
    DataSet::new(points, Some(labels))
}

fn covariance_root(cov: &[Vec<f64>], d: usize, component: usize) -> Result<DMatrix<f64>> {
    if cov.len() != d || cov.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: cov.len(),
        });
    }
    let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
    let scale = m.amax().max(1.0);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveSemidefinite { component });
    }
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
        return Err(Error::NotPositiveSemidefinite { component });
    }
    let sqrt_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * sqrt_vals)
}

/// Centers each feature on its mean and scales it by the largest absolute
/// centered value, so every coordinate lands in `[-1, 1]`.
///
/// Features with zero spread are left at zero rather than divided.
pub fn normalize_features(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = check_rectangular(points)?;
    let n = points.len() as f64;
    let mut out = points.to_vec();
    for j in 0..d {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let max_abs = points
            .iter()
            .map(|p| (p[j] - mean).abs())
            .fold(0.0_f64, f64::max);
        let divisor = if max_abs > 0.0 { max_abs } else { 1.0 };
        for p in &mut out {
            p[j] = (p[j] - mean) / divisor;
        }
    }
    Ok(out)
}

const LABEL_COLUMN: &str = "label";

/// Reads a headed CSV of features `x0..x{d-1}` plus an optional `label` column.
///
/// Row indices in parse errors count data rows from 0 (the header excluded).
pub fn load_csv(path: impl AsRef<Path>) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_col = headers.iter().position(|h| h.trim() == LABEL_COLUMN);
    let width = headers.len();

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != width {
            return Err(Error::Parse {
                row,
                reason: format!("expected {width} cells, found {}", record.len()),
            });
        }
        let mut point = Vec::with_capacity(width);
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if Some(col) == label_col {
                let label = cell.parse::<usize>().map_err(|_| Error::Parse {
                    row,
                    reason: format!("label {cell:?} is not a non-negative integer"),
                })?;
                labels.push(label);
            } else {
                let v = cell.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    reason: format!("cell {cell:?} in column {col} is not numeric"),
                })?;
                point.push(v);
            }
        }
        points.push(point);
    }
    let labels = label_col.map(|_| labels);
    DataSet::new(points, labels)
}

/// Writes `dataset` in the format read by [`load_csv`].
///
/// Values use Rust's shortest round-trip float formatting, so reloading is exact.
pub fn save_csv(dataset: &DataSet, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("x{j}")).collect();
    if dataset.true_labels().is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    writer.write_record(&header)?;
    for (i, p) in dataset.points().iter().enumerate() {
        let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = dataset.true_labels() {
            row.push(labels[i].to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
