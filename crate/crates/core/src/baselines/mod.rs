//! Comparison detectors. All emit scores where larger means more anomalous.

mod ecod;
mod hbos;
mod neighbors;

pub use ecod::{ecod_score, EcdfModel};
pub use hbos::{hbos_score, HistogramModel, DEFAULT_BINS, DENSITY_FLOOR};
pub use neighbors::{knn_distances, knn_score, lof_score, lof_values, DEFAULT_KNN_K, DEFAULT_LOF_K, NEIGHBOR_LIMIT};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::fingerprint::{ClusterModel, KMeansMode, KMeansParams};
use crate::matrix::{standardize, Matrix};
use crate::score::ScoreVector;

pub const DEFAULT_KMEANS_K: usize = 8;

/// Feature scaling applied before a distance-based detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureScaling {
    /// Population z-score per feature (constant features become 0).
    #[default]
    ZScore,
    None,
}

impl FeatureScaling {
    pub(crate) fn apply(self, m: &Matrix) -> Matrix {
        match self {
            FeatureScaling::ZScore => standardize(m).0,
            FeatureScaling::None => m.clone(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureScaling::ZScore => "zscore",
            FeatureScaling::None => "none",
        }
    }
}

/// Global k-means in feature space; the score is the distance to the
/// nearest centroid.
pub fn kmeans_distance_score(
    data: &Dataset,
    k: usize,
    seed: u64,
    mode: KMeansMode,
    scaling: FeatureScaling,
) -> Result<ScoreVector> {
    let x = scaling.apply(data.features());
    let model = ClusterModel::fit(&x, &KMeansParams::new(k, seed).with_mode(mode))?;
    let scores = model.nearest_distances(&x)?;
    Ok(ScoreVector::new("kmeans", scores)
        .with_param("k", k)
        .with_param("scaling", scaling.as_str())
        .with_seed(seed))
}
