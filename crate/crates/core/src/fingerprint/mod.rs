//! Path-length fingerprints: the `N x T` matrix of per-tree isolation
//! depths, its column standardization, and k-means over the result.

mod kmeans;

pub use kmeans::{
    ClusterModel, KMeansMode, KMeansParams, DEFAULT_BATCH_SIZE, DEFAULT_MAX_BATCHES,
    DEFAULT_MAX_ITER, DEFAULT_TOLERANCE, MINIBATCH_AUTO_THRESHOLD,
};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::iforest::Forest;
use crate::matrix::{ColumnStats, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintMatrix {
    values: Matrix,
    stats: Option<ColumnStats>,
}

impl FingerprintMatrix {
    /// Wraps an unstandardized matrix.
    pub fn raw(values: Matrix) -> Self {
        Self { values, stats: None }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn is_standardized(&self) -> bool {
        self.stats.is_some()
    }

    /// Column statistics used for standardization, if applied.
    pub fn stats(&self) -> Option<&ColumnStats> {
        self.stats.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// z-scores every column with its population standard deviation;
    /// zero-variance columns become all zeros.
    pub fn standardize_columns(&self) -> Self {
        let stats = ColumnStats::fit(&self.values);
        let values = stats.apply(&self.values).expect("same width");
        Self {
            values,
            stats: Some(stats),
        }
    }

    /// Standardizes a raw matrix with previously fitted statistics, e.g.
    /// fingerprints of new data scored against a persisted model.
    pub fn standardize_with(&self, stats: &ColumnStats) -> Result<Self> {
        if self.is_standardized() {
            return Err(Error::invalid("matrix is already standardized"));
        }
        Ok(Self {
            values: stats.apply(&self.values)?,
            stats: Some(stats.clone()),
        })
    }
}

pub fn extract_fingerprints(forest: &Forest, data: &Dataset) -> Result<FingerprintMatrix> {
    Ok(FingerprintMatrix::raw(forest.path_lengths(data.features())?))
}

pub fn standardize_columns(m: &FingerprintMatrix) -> FingerprintMatrix {
    m.standardize_columns()
}

/// Clusters standardized fingerprints.
pub fn kmeans_fit(m: &FingerprintMatrix, params: &KMeansParams) -> Result<ClusterModel> {
    let stats = m
        .stats()
        .ok_or_else(|| Error::invalid("k-means expects a standardized fingerprint matrix"))?;
    let mut model = ClusterModel::fit(m.values(), params)?;
    model.stats = Some(stats.clone());
    Ok(model)
}

/// Nearest-centroid labels for `m`, which must carry the same
/// standardization the model was fitted with.
pub fn assign(model: &ClusterModel, m: &FingerprintMatrix) -> Result<Vec<usize>> {
    if m.stats() != model.stats.as_ref() {
        return Err(Error::invalid(
            "fingerprints were standardized differently from the model's training data",
        ));
    }
    model.assign_points(m.values())
}
