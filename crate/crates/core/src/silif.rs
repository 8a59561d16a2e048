//! Silhouette-augmented Isolation Forest.
//!
//! Fingerprints are clustered into `K` structural groups; a point that sits
//! far from its own centroid relative to the nearest rival centroid gets a
//! high silhouette contribution `1 - (b - a) / max(a, b)`. The final score
//! is `z(s_if) + alpha * z(s_sil)`, so `alpha = 0` ranks exactly like the
//! plain forest.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fingerprint::{self, ClusterModel, FingerprintMatrix, KMeansMode, KMeansParams};
use crate::iforest::{self, Forest, ForestParams};
use crate::matrix::{distance, Matrix};
use crate::metrics::{mean, population_std, zscore};
use crate::score::ScoreVector;
use crate::text_format::LineReader;

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_K: usize = 8;
/// Size limit for the quadratic exact-silhouette oracle.
pub const EXACT_SILHOUETTE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilifParams {
    pub alpha: f64,
    pub k: usize,
    pub n_trees: usize,
    pub subsample: usize,
    pub seed: u64,
    pub kmeans_mode: KMeansMode,
    pub batch_size: usize,
}

impl Default for SilifParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
            n_trees: iforest::DEFAULT_TREES,
            subsample: iforest::DEFAULT_SUBSAMPLE,
            seed: 0,
            kmeans_mode: KMeansMode::Auto,
            batch_size: fingerprint::DEFAULT_BATCH_SIZE,
        }
    }
}

impl SilifParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if self.k < 2 {
            return Err(Error::invalid("silhouette needs K >= 2"));
        }
        Ok(())
    }

    fn forest(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            subsample: self.subsample,
            seed: self.seed,
        }
    }

    fn kmeans(&self) -> KMeansParams {
        KMeansParams::new(self.k, self.seed)
            .with_mode(self.kmeans_mode)
            .with_batch_size(self.batch_size)
    }
}

/// `1 - (b - a) / max(a, b)`, in `[0, 2]`. `a = b = 0` maps to 1.
#[inline]
pub fn contribution(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m > 0.0 {
        1.0 - (b - a) / m
    } else {
        1.0
    }
}

/// Centroid-distance silhouette contribution for arbitrary labels:
/// `a` is the distance to the labelled centroid, `b` the nearest other one.
pub fn centroid_contributions(points: &Matrix, centroids: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    let k = centroids.rows();
    if k < 2 {
        return Err(Error::invalid("silhouette needs at least two centroids"));
    }
    if points.cols() != centroids.cols() {
        return Err(Error::DimensionMismatch {
            expected: centroids.cols(),
            actual: points.cols(),
        });
    }
    if labels.len() != points.rows() {
        return Err(Error::DimensionMismatch {
            expected: points.rows(),
            actual: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("label {bad} out of range for K = {k}")));
    }
    Ok((0..points.rows())
        .into_par_iter()
        .map(|i| {
            let x = points.row(i);
            let own = labels[i];
            let a = distance(x, centroids.row(own));
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| distance(x, centroids.row(c)))
                .fold(f64::INFINITY, f64::min);
            contribution(a, b)
        })
        .collect())
}

/// Silhouette anomaly contribution of every row of `m` against `model`,
/// with each row labelled by its nearest centroid.
pub fn silhouette_contribution(m: &FingerprintMatrix, model: &ClusterModel) -> Result<ScoreVector> {
    if !m.is_standardized() {
        return Err(Error::invalid("silhouette expects standardized fingerprints"));
    }
    let labels = fingerprint::assign(model, m)?;
    let values = centroid_contributions(m.values(), model.centroids(), &labels)?;
    Ok(ScoreVector::new("silhouette", values).with_param("k", model.k()))
}

/// Textbook silhouette from all pairwise distances. Quadratic; intended as
/// an oracle for the centroid approximation on small inputs. Members of a
/// singleton cluster get 0.
pub fn exact_silhouette(points: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    let n = points.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if n > EXACT_SILHOUETTE_LIMIT {
        return Err(Error::SizeGuard {
            n,
            limit: EXACT_SILHOUETTE_LIMIT,
        });
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::invalid("silhouette needs at least two clusters"));
    }
    let slot: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(s, &id)| (id, s)).collect();
    let dense: Vec<usize> = labels.iter().map(|l| slot[l]).collect();
    let mut sizes = vec![0usize; ids.len()];
    for &c in &dense {
        sizes[c] += 1;
    }

    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let own = dense[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; sizes.len()];
            for j in 0..n {
                if j != i {
                    sums[dense[j]] += distance(points.row(i), points.row(j));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..sizes.len())
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect())
}

/// `z(s_if) + alpha * z(s_sil)` with population z-scores over the batch.
pub fn combine(s_if: &ScoreVector, s_sil: &ScoreVector, alpha: f64) -> Result<ScoreVector> {
    if s_if.len() != s_sil.len() {
        return Err(Error::DimensionMismatch {
            expected: s_if.len(),
            actual: s_sil.len(),
        });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let zi = zscore(&s_if.scores);
    let zs = zscore(&s_sil.scores);
    Ok(blend(&zi, &zs, alpha))
}

fn blend(z_if: &[f64], z_sil: &[f64], alpha: f64) -> ScoreVector {
    let scores = z_if.iter().zip(z_sil).map(|(a, b)| a + alpha * b).collect();
    ScoreVector::new("silif", scores).with_param("alpha", alpha)
}

/// Mean and population std of a score over the training batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            std: population_std(values),
        }
    }

    fn z(&self, values: &[f64]) -> Vec<f64> {
        if self.std > 0.0 {
            values.iter().map(|v| (v - self.mean) / self.std).collect()
        } else {
            vec![0.0; values.len()]
        }
    }
}

/// Everything computed before the alpha-dependent blend: the fitted models
/// and both component scores on the training data. Sweeping alpha only
/// needs [`SilifFit::combine`].
#[derive(Debug, Clone)]
pub struct SilifFit {
    pub forest: Forest,
    pub clusters: ClusterModel,
    pub if_scores: ScoreVector,
    pub sil_scores: ScoreVector,
    pub params: SilifParams,
}

impl SilifFit {
    pub fn fit(data: &Dataset, params: &SilifParams) -> Result<Self> {
        params.validate()?;
        let forest = Forest::fit(data.features(), &params.forest())?;
        let if_scores = forest.score_matrix(data.features())?;
        let fingerprints = fingerprint::extract_fingerprints(&forest, data)?.standardize_columns();
        let clusters = fingerprint::kmeans_fit(&fingerprints, &params.kmeans())?;
        let sil_scores = silhouette_contribution(&fingerprints, &clusters)?;
        Ok(Self {
            forest,
            clusters,
            if_scores,
            sil_scores,
            params: *params,
        })
    }

    pub fn combine(&self, alpha: f64) -> Result<ScoreVector> {
        let s = combine(&self.if_scores, &self.sil_scores, alpha)?;
        Ok(s.with_param("k", self.params.k)
            .with_param("trees", self.forest.n_trees())
            .with_param("subsample", self.forest.subsample())
            .with_seed(self.params.seed))
    }

    pub fn into_model(self) -> SilifModel {
        SilifModel {
            alpha: self.params.alpha,
            if_moments: Moments::of(&self.if_scores.scores),
            sil_moments: Moments::of(&self.sil_scores.scores),
            forest: self.forest,
            clusters: self.clusters,
        }
    }
}

/// Fits the full pipeline and returns the blended score with both models.
pub fn silif_score(data: &Dataset, params: &SilifParams) -> Result<(ScoreVector, Forest, ClusterModel)> {
    let fit = SilifFit::fit(data, params)?;
    let scores = fit.combine(params.alpha)?;
    Ok((scores, fit.forest, fit.clusters))
}

/// Where the z-score statistics for [`SilifModel::score`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreBasis {
    /// Standardize over the batch being scored.
    Batch,
    /// Reuse the training-batch means and standard deviations.
    Training,
}

/// A persisted SilIF model.
#[derive(Debug, Clone, PartialEq)]
pub struct SilifModel {
    pub forest: Forest,
    pub clusters: ClusterModel,
    pub alpha: f64,
    pub if_moments: Moments,
    pub sil_moments: Moments,
}

impl SilifModel {
    pub fn score(&self, data: &Dataset, basis: ScoreBasis) -> Result<ScoreVector> {
        let if_scores = self.forest.score_matrix(data.features())?;
        let stats = self
            .clusters
            .stats
            .as_ref()
            .ok_or_else(|| Error::ModelFormat("cluster model lacks standardization".into()))?;
        let fp = fingerprint::extract_fingerprints(&self.forest, data)?.standardize_with(stats)?;
        let sil = silhouette_contribution(&fp, &self.clusters)?;
        let out = match basis {
            ScoreBasis::Batch => combine(&if_scores, &sil, self.alpha)?,
            ScoreBasis::Training => blend(
                &self.if_moments.z(&if_scores.scores),
                &self.sil_moments.z(&sil.scores),
                self.alpha,
            ),
        };
        Ok(out.with_param("k", self.clusters.k()).with_seed(self.forest.seed()))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "silif-model 1")?;
        writeln!(w, "alpha {}", self.alpha)?;
        writeln!(w, "if_moments {} {}", self.if_moments.mean, self.if_moments.std)?;
        writeln!(w, "sil_moments {} {}", self.sil_moments.mean, self.sil_moments.std)?;
        self.forest.write_to(w)?;
        self.clusters.write_to(w)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut r = LineReader::new(r);
        let version: u32 = r.expect_value("silif-model")?;
        if version != 1 {
            return Err(r.error(format!("unsupported model version {version}")));
        }
        let alpha: f64 = r.expect_value("alpha")?;
        let moments = |r: &mut LineReader<R>, key: &str| -> Result<Moments> {
            match r.expect_values::<f64>(key)?.as_slice() {
                [mean, std] => Ok(Moments { mean: *mean, std: *std }),
                _ => Err(r.error(format!("`{key}` takes two values"))),
            }
        };
        let if_moments = moments(&mut r, "if_moments")?;
        let sil_moments = moments(&mut r, "sil_moments")?;
        let forest = Forest::read_records(&mut r)?;
        let clusters = ClusterModel::read_records(&mut r)?;
        if clusters.stats.is_none() || clusters.dim() != forest.n_trees() {
            return Err(Error::ModelFormat(
                "cluster model does not match the forest's fingerprint width".into(),
            ));
        }
        Ok(Self {
            forest,
            clusters,
            alpha,
            if_moments,
            sil_moments,
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;

    #[test]
    fn contribution_boundaries() {
        assert_eq!(contribution(2.0, 2.0), 1.0);
        assert_eq!(contribution(0.0, 3.0), 0.0);
        assert_eq!(contribution(3.0, 0.0), 2.0);
        assert_eq!(contribution(0.0, 0.0), 1.0);
    }

    #[test]
    fn centroid_contributions_need_two_centroids() {
        let pts = Matrix::column_vector(&[0.0, 1.0]);
        let c = Matrix::column_vector(&[0.5]);
        assert!(centroid_contributions(&pts, &c, &[0, 0]).is_err());
    }

    #[test]
    fn exact_silhouette_examples() {
        let pts = Matrix::column_vector(&[0.0, 5.0]);
        assert_eq!(exact_silhouette(&pts, &[0, 1]).unwrap(), vec![0.0, 0.0]);

        let pts = Matrix::column_vector(&[0.0, 0.1, 10.0]);
        let s = exact_silhouette(&pts, &[0, 0, 1]).unwrap();
        assert!((s[0] - 0.99).abs() < 1e-12);
        assert_eq!(s[2], 0.0);

        assert!(exact_silhouette(&pts, &[3, 3, 3]).is_err());
    }

    #[test]
    fn exact_silhouette_tight_blobs() {
        let mut v: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        v.extend((0..20).map(|i| 100.0 + i as f64 * 0.01));
        let labels: Vec<usize> = (0..40).map(|i| i / 20).collect();
        let s = exact_silhouette(&Matrix::column_vector(&v), &labels).unwrap();
        assert!(s.iter().all(|&x| x > 0.9));
    }

    #[test]
    fn combine_examples() {
        let s_if = ScoreVector::new("iforest", vec![1.0, 2.0, 3.0]);
        let s_sil = ScoreVector::new("silhouette", vec![3.0, 2.0, 1.0]);
        let out = combine(&s_if, &s_sil, 1.0).unwrap();
        assert!(out.scores.iter().all(|v| v.abs() < 1e-12));

        let out = combine(&s_if, &s_sil, 0.0).unwrap();
        assert_eq!(out.scores, zscore(&s_if.scores));

        let flat = ScoreVector::new("silhouette", vec![0.7; 3]);
        for alpha in [0.0, 0.5, 4.0] {
            let out = combine(&s_if, &flat, alpha).unwrap();
            assert_eq!(out.ranking(), s_if.ranking());
        }

        assert!(combine(&s_if, &ScoreVector::new("x", vec![1.0]), 1.0).is_err());
        assert!(combine(&s_if, &s_sil, -0.1).is_err());
    }

    #[test]
    fn combine_is_affine_in_alpha() {
        let s_if = ScoreVector::new("a", vec![0.3, 0.9, 0.1, 0.4]);
        let s_sil = ScoreVector::new("b", vec![0.2, 0.5, 1.7, 0.1]);
        let c0 = combine(&s_if, &s_sil, 0.0).unwrap();
        let c1 = combine(&s_if, &s_sil, 1.0).unwrap();
        let c3 = combine(&s_if, &s_sil, 3.0).unwrap();
        for i in 0..4 {
            let slope = c1.scores[i] - c0.scores[i];
            assert!((c3.scores[i] - (c0.scores[i] + 3.0 * slope)).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_zero_matches_forest_ranking() {
        let ds = generate_synthetic(300, 12, 4, 8).unwrap();
        let params = SilifParams::default().with_seed(8).with_alpha(0.0);
        let (scores, forest, _) = silif_score(&ds, &params).unwrap();
        let plain = iforest::score(&forest, &ds).unwrap();
        assert_eq!(scores.ranking(), plain.ranking());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let ds = generate_synthetic(300, 12, 4, 2).unwrap();
        let params = SilifParams::default().with_seed(2);
        let a = silif_score(&ds, &params).unwrap();
        let b = silif_score(&ds, &params).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
    }

    #[test]
    fn params_validation() {
        let ds = generate_synthetic(50, 2, 2, 1).unwrap();
        assert!(silif_score(&ds, &SilifParams::default().with_alpha(-1.0)).is_err());
        let p = SilifParams { k: 1, ..SilifParams::default() };
        assert!(silif_score(&ds, &p).is_err());
    }

    #[test]
    fn model_round_trip_and_training_basis() {
        let ds = generate_synthetic(200, 8, 3, 4).unwrap();
        let params = SilifParams { n_trees: 20, k: 4, ..SilifParams::default() }.with_seed(4);
        let fit = SilifFit::fit(&ds, &params).unwrap();
        let batch = fit.combine(params.alpha).unwrap();
        let model = fit.into_model();

        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = SilifModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.forest, model.forest);
        assert_eq!(back.clusters.centroids(), model.clusters.centroids());

        let rescored = back.score(&ds, ScoreBasis::Batch).unwrap();
        assert_eq!(rescored.scores, batch.scores);
        // Training basis on the training data reproduces the batch scores.
        let train = back.score(&ds, ScoreBasis::Training).unwrap();
        for (a, b) in train.scores.iter().zip(&batch.scores) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
