//! Unsupervised anomaly detection built around Isolation Forest.
//!
//! The headline detector is SilIF: train an Isolation Forest, keep each
//! point's per-tree path lengths as a fingerprint, cluster the standardized
//! fingerprints with k-means, and blend a centroid-silhouette misfit score
//! into the forest score with a single weight `alpha`.
//!
//! ```no_run
//! use silif_core::{dataset, silif};
//!
//! let data = dataset::generate_synthetic(1000, 35, 6, 42)?;
//! let params = silif::SilifParams::default().with_seed(42);
//! let (scores, _forest, _clusters) = silif::silif_score(&data, &params)?;
//! let auc = silif_core::metrics::auc_roc(&scores.scores, data.labels())?;
//! println!("AUC-ROC {auc:.4}");
//! # Ok::<(), silif_core::Error>(())
//! ```
//!
//! Also included: HBOS, ECOD, global k-means distance, k-NN distance and LOF
//! baselines ([`baselines`]), ranking metrics with a paired t-test
//! ([`metrics`]) and a seeded multi-seed experiment harness ([`harness`]).

pub mod baselines;
pub mod dataset;
mod error;
pub mod fingerprint;
pub mod harness;
pub mod iforest;
pub mod matrix;
pub mod metrics;
pub mod rng;
mod score;
pub mod silif;
mod text_format;

pub use dataset::{Dataset, DatasetConfig};
pub use error::{Error, Result};
pub use fingerprint::{ClusterModel, FingerprintMatrix, KMeansMode};
pub use iforest::Forest;
pub use matrix::Matrix;
pub use score::{descending_order, ScoreVector};
pub use silif::{SilifModel, SilifParams};
