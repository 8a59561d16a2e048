//! Lloyd and mini-batch k-means with k-means++ seeding.
//!
//! Per-point work (distances, assignment) runs in parallel; every reduction
//! (inertia, centroid sums) is accumulated sequentially in point order so
//! results are identical regardless of thread count.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, ColumnStats, Matrix};
use crate::rng::SeededRng;
use crate::text_format::{join, LineReader};

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_BATCH_SIZE: usize = 1024;
pub const DEFAULT_MAX_BATCHES: usize = 100;
/// `Auto` switches to mini-batch above this many rows.
pub const MINIBATCH_AUTO_THRESHOLD: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMeansMode {
    Full,
    MiniBatch,
    Auto,
}

impl KMeansMode {
    pub fn resolve(self, n: usize) -> Self {
        match self {
            KMeansMode::Auto if n > MINIBATCH_AUTO_THRESHOLD => KMeansMode::MiniBatch,
            KMeansMode::Auto => KMeansMode::Full,
            m => m,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KMeansMode::Full => "full",
            KMeansMode::MiniBatch => "minibatch",
            KMeansMode::Auto => "auto",
        }
    }
}

impl std::str::FromStr for KMeansMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(KMeansMode::Full),
            "minibatch" | "mini-batch" => Ok(KMeansMode::MiniBatch),
            "auto" => Ok(KMeansMode::Auto),
            other => Err(Error::invalid(format!("unknown k-means mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub mode: KMeansMode,
    pub batch_size: usize,
    pub max_batches: usize,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            mode: KMeansMode::Auto,
            batch_size: DEFAULT_BATCH_SIZE,
            max_batches: DEFAULT_MAX_BATCHES,
            max_iter: DEFAULT_MAX_ITER,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_mode(mut self, mode: KMeansMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_batch_size(mut self, batch: usize) -> Self {
        self.batch_size = batch;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Matrix,
    labels: Vec<usize>,
    inertia: f64,
    inertia_trace: Vec<f64>,
    seed: u64,
    mode: KMeansMode,
    /// Standardization applied to the training rows, when any.
    pub stats: Option<ColumnStats>,
}

/// Index of the nearest centroid and the squared distance to it. Ties go
/// to the lowest index.
#[inline]
pub(crate) fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = squared_distance(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign_all(points: &Matrix, centroids: &Matrix) -> (Vec<usize>, Vec<f64>, f64) {
    let pairs: Vec<(usize, f64)> = (0..points.rows())
        .into_par_iter()
        .map(|i| nearest(points.row(i), centroids))
        .collect();
    let inertia = pairs.iter().map(|p| p.1).sum();
    let (labels, d2) = pairs.into_iter().unzip();
    (labels, d2, inertia)
}

/// Counts distinct rows, stopping once `cap` is reached.
fn distinct_rows(points: &Matrix, cap: usize) -> usize {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for row in points.iter_rows() {
        // +0.0 folds -0.0 into 0.0
        seen.insert(row.iter().map(|v| (v + 0.0).to_bits()).collect());
        if seen.len() >= cap {
            break;
        }
    }
    seen.len()
}

fn kmeans_plus_plus(points: &Matrix, k: usize, rng: &mut SeededRng) -> Matrix {
    let n = points.rows();
    let mut centroids = Matrix::zeros(k, points.cols());
    let first = rng.below(n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| squared_distance(points.row(i), points.row(first)))
        .collect();

    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total weight")
        } else {
            // Cannot happen when k <= distinct rows; fall back to a uniform pick.
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        let new = centroids.row(c).to_vec();
        d2.par_iter_mut().enumerate().for_each(|(i, w)| {
            let d = squared_distance(points.row(i), &new);
            if d < *w {
                *w = d;
            }
        });
    }
    centroids
}

/// Moves each empty cluster onto the point currently farthest from its own
/// centroid. `d2` holds each point's squared distance to its centroid.
fn reseed_empty(points: &Matrix, centroids: &mut Matrix, labels: &[usize], d2: &mut [f64]) -> bool {
    let k = centroids.rows();
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let mut changed = false;
    for (c, count) in counts.iter_mut().enumerate() {
        if *count > 0 {
            continue;
        }
        let far = (0..d2.len()).fold(0, |best, i| if d2[i] > d2[best] { i } else { best });
        if d2[far] <= 0.0 {
            break;
        }
        centroids.row_mut(c).copy_from_slice(points.row(far));
        d2[far] = 0.0;
        *count = 1;
        changed = true;
    }
    changed
}

impl ClusterModel {
    pub fn fit(points: &Matrix, params: &KMeansParams) -> Result<Self> {
        let n = points.rows();
        let k = params.k;
        if k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if k > n {
            return Err(Error::invalid(format!("k = {k} exceeds the {n} available rows")));
        }
        let distinct = distinct_rows(points, k);
        if distinct < k {
            return Err(Error::TooFewDistinctRows {
                requested: k,
                achievable: distinct,
            });
        }
        if params.max_iter < 1 || params.batch_size < 1 {
            return Err(Error::invalid("iteration budget and batch size must be positive"));
        }

        let mut rng = SeededRng::new(params.seed);
        let init = kmeans_plus_plus(points, k, &mut rng);
        let mode = params.mode.resolve(n);
        let (centroids, mut trace) = match mode {
            KMeansMode::MiniBatch => (minibatch(points, init, params, &mut rng), Vec::new()),
            _ => lloyd(points, init, params),
        };

        let mut centroids = centroids;
        let (mut labels, mut d2, mut inertia) = assign_all(points, &centroids);
        for _ in 0..k {
            if !reseed_empty(points, &mut centroids, &labels, &mut d2) {
                break;
            }
            (labels, d2, inertia) = assign_all(points, &centroids);
        }
        if mode == KMeansMode::MiniBatch {
            trace.push(inertia);
        }

        Ok(Self {
            centroids,
            labels,
            inertia,
            inertia_trace: trace,
            seed: params.seed,
            mode,
            stats: None,
        })
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    /// Training-row labels (empty for a model read from disk).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Inertia after each assignment pass. The first entry is the
    /// assignment to the k-means++ seeds (full mode).
    pub fn inertia_trace(&self) -> &[f64] {
        &self.inertia_trace
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> KMeansMode {
        self.mode
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn assign_points(&self, points: &Matrix) -> Result<Vec<usize>> {
        if points.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: points.cols(),
            });
        }
        Ok(assign_all(points, &self.centroids).0)
    }

    /// Euclidean distance from each point to its nearest centroid.
    pub fn nearest_distances(&self, points: &Matrix) -> Result<Vec<f64>> {
        if points.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: points.cols(),
            });
        }
        Ok(assign_all(points, &self.centroids)
            .1
            .into_iter()
            .map(f64::sqrt)
            .collect())
    }

    pub fn from_parts(centroids: Matrix, seed: u64, mode: KMeansMode, stats: Option<ColumnStats>) -> Result<Self> {
        if centroids.rows() < 1 {
            return Err(Error::invalid("cluster model needs at least one centroid"));
        }
        if let Some(s) = &stats {
            if s.dim() != centroids.cols() {
                return Err(Error::DimensionMismatch {
                    expected: centroids.cols(),
                    actual: s.dim(),
                });
            }
        }
        Ok(Self {
            centroids,
            labels: Vec::new(),
            inertia: f64::NAN,
            inertia_trace: Vec::new(),
            seed,
            mode,
            stats,
        })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "silif-kmeans 1")?;
        writeln!(w, "k {}", self.k())?;
        writeln!(w, "dim {}", self.dim())?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "mode {}", self.mode.as_str())?;
        match &self.stats {
            Some(s) => {
                writeln!(w, "standardized 1")?;
                writeln!(w, "means {}", join(&s.means))?;
                writeln!(w, "stds {}", join(&s.stds))?;
            }
            None => writeln!(w, "standardized 0")?,
        }
        for row in self.centroids.iter_rows() {
            writeln!(w, "centroid {}", join(row))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        Self::read_records(&mut LineReader::new(r))
    }

    pub(crate) fn read_records<R: BufRead>(r: &mut LineReader<R>) -> Result<Self> {
        let version: u32 = r.expect_value("silif-kmeans")?;
        if version != 1 {
            return Err(r.error(format!("unsupported k-means version {version}")));
        }
        let k: usize = r.expect_value("k")?;
        let dim: usize = r.expect_value("dim")?;
        let seed: u64 = r.expect_value("seed")?;
        let mode: String = r.expect_value("mode")?;
        let mode: KMeansMode = mode.parse()?;
        let standardized: u8 = r.expect_value("standardized")?;
        let stats = if standardized == 1 {
            let means: Vec<f64> = r.expect_values("means")?;
            let stds: Vec<f64> = r.expect_values("stds")?;
            if means.len() != dim || stds.len() != dim {
                return Err(r.error("standardization vectors have the wrong length".into()));
            }
            Some(ColumnStats { means, stds })
        } else {
            None
        };
        let mut data = Vec::with_capacity(k * dim);
        for _ in 0..k {
            let row: Vec<f64> = r.expect_values("centroid")?;
            if row.len() != dim {
                return Err(r.error(format!("centroid has {} values, expected {dim}", row.len())));
            }
            data.extend(row);
        }
        Self::from_parts(Matrix::new(k, dim, data)?, seed, mode, stats)
    }
}

fn lloyd(points: &Matrix, mut centroids: Matrix, params: &KMeansParams) -> (Matrix, Vec<f64>) {
    let k = centroids.rows();
    let dim = points.cols();
    let (mut labels, mut d2, inertia) = assign_all(points, &centroids);
    let mut trace = vec![inertia];

    for _ in 0..params.max_iter {
        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums.row_mut(l).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut next = centroids.clone();
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (dst, s) in next.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        // Distances to the updated means drive the empty-cluster reseed.
        for (i, &l) in labels.iter().enumerate() {
            d2[i] = squared_distance(points.row(i), next.row(l));
        }
        reseed_empty(points, &mut next, &labels, &mut d2);

        let shift = (0..k)
            .map(|c| squared_distance(centroids.row(c), next.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        let inertia;
        (labels, d2, inertia) = assign_all(points, &centroids);
        trace.push(inertia);
        if shift < params.tolerance {
            break;
        }
    }
    (centroids, trace)
}

/// Per-centroid learning rate `1 / count` over random batches.
fn minibatch(points: &Matrix, mut centroids: Matrix, params: &KMeansParams, rng: &mut SeededRng) -> Matrix {
    let n = points.rows();
    let mut counts = vec![0usize; centroids.rows()];
    let full_batch: Vec<usize> = (0..n).collect();
    for _ in 0..params.max_batches {
        let batch = if params.batch_size >= n {
            full_batch.clone()
        } else {
            rng.sample_indices(n, params.batch_size)
        };
        let labels: Vec<usize> = batch
            .par_iter()
            .map(|&i| nearest(points.row(i), &centroids).0)
            .collect();
        for (&i, &c) in batch.iter().zip(&labels) {
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            for (dst, x) in centroids.row_mut(c).iter_mut().zip(points.row(i)) {
                *dst += eta * (x - *dst);
            }
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_per: usize, seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = SeededRng::new(seed);
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (b, center) in [[0.0, 0.0, 0.0], [12.0, -3.0, 8.0]].iter().enumerate() {
            for _ in 0..n_per {
                rows.push(center.iter().map(|c| c + rng.standard_normal()).collect::<Vec<_>>());
                truth.push(b);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), truth)
    }

    /// Fraction of points whose cluster agrees with the majority cluster of
    /// their true group, after the best 2-label matching.
    fn agreement(a: &[usize], b: &[usize]) -> f64 {
        let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
        let n = a.len();
        same.max(n - same) as f64 / n as f64
    }

    #[test]
    fn exact_two_point_clustering() {
        let m = Matrix::column_vector(&[0.0, 10.0]);
        for mode in [KMeansMode::Full, KMeansMode::MiniBatch] {
            let model = ClusterModel::fit(&m, &KMeansParams::new(2, 3).with_mode(mode)).unwrap();
            let mut c = model.centroids().column(0);
            c.sort_by(f64::total_cmp);
            assert_eq!(c, vec![0.0, 10.0]);
            assert_eq!(model.inertia(), 0.0);
        }
    }

    #[test]
    fn lloyd_inertia_never_increases() {
        for seed in 0..5 {
            let mut rng = SeededRng::new(100 + seed);
            let rows: Vec<Vec<f64>> = (0..300)
                .map(|_| (0..4).map(|_| rng.uniform() * 10.0).collect())
                .collect();
            let m = Matrix::from_rows(&rows).unwrap();
            let model = ClusterModel::fit(&m, &KMeansParams::new(6, seed).with_mode(KMeansMode::Full)).unwrap();
            let trace = model.inertia_trace();
            assert!(trace.len() >= 2);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{trace:?}");
            }
            assert!(model.inertia() <= trace[0]);
        }
    }

    #[test]
    fn recovers_two_blobs() {
        for seed in 42..47 {
            let (m, truth) = blobs(50, seed);
            for mode in [KMeansMode::Full, KMeansMode::MiniBatch] {
                let model = ClusterModel::fit(&m, &KMeansParams::new(2, seed).with_mode(mode).with_batch_size(32)).unwrap();
                assert!(agreement(model.labels(), &truth) >= 0.98, "seed {seed} {mode:?}");
            }
        }
    }

    #[test]
    fn minibatch_agrees_with_full() {
        let (m, _) = blobs(400, 9);
        let full = ClusterModel::fit(&m, &KMeansParams::new(2, 1).with_mode(KMeansMode::Full)).unwrap();
        let mb = ClusterModel::fit(&m, &KMeansParams::new(2, 1).with_mode(KMeansMode::MiniBatch).with_batch_size(64)).unwrap();
        assert!(agreement(full.labels(), mb.labels()) >= 0.95);
    }

    #[test]
    fn rejects_k_above_n_or_distinct() {
        let m = Matrix::column_vector(&[1.0, 1.0, 2.0]);
        assert!(ClusterModel::fit(&m, &KMeansParams::new(4, 0)).is_err());
        match ClusterModel::fit(&m, &KMeansParams::new(3, 0)) {
            Err(Error::TooFewDistinctRows { requested, achievable }) => {
                assert_eq!((requested, achievable), (3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_empty_clusters_with_duplicates() {
        // Heavy duplication stresses the reseeding path.
        let mut vals = vec![0.0; 50];
        vals.extend([1.0, 2.0, 3.0, 100.0, 101.0]);
        let m = Matrix::column_vector(&vals);
        for mode in [KMeansMode::Full, KMeansMode::MiniBatch] {
            for seed in 0..10 {
                let model = ClusterModel::fit(&m, &KMeansParams::new(5, seed).with_mode(mode).with_batch_size(8)).unwrap();
                assert!(model.cluster_sizes().iter().all(|&c| c > 0), "{mode:?} seed {seed}");
            }
        }
    }

    #[test]
    fn assignment_ties_go_to_lowest_index() {
        let centroids = Matrix::column_vector(&[-1.0, 5.0, 1.0]);
        let model = ClusterModel::from_parts(centroids, 0, KMeansMode::Full, None).unwrap();
        let pts = Matrix::column_vector(&[0.0, 5.0]);
        assert_eq!(model.assign_points(&pts).unwrap(), vec![0, 1]);
        assert!(model.assign_points(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn reassigning_training_rows_reproduces_labels() {
        let (m, _) = blobs(60, 4);
        let model = ClusterModel::fit(&m, &KMeansParams::new(5, 4)).unwrap();
        assert_eq!(model.assign_points(&m).unwrap(), model.labels());
    }

    #[test]
    fn deterministic_per_seed() {
        let (m, _) = blobs(100, 5);
        for mode in [KMeansMode::Full, KMeansMode::MiniBatch] {
            let p = KMeansParams::new(4, 11).with_mode(mode).with_batch_size(50);
            assert_eq!(ClusterModel::fit(&m, &p).unwrap(), ClusterModel::fit(&m, &p).unwrap());
        }
    }

    #[test]
    fn auto_mode_threshold() {
        assert_eq!(KMeansMode::Auto.resolve(50_000), KMeansMode::Full);
        assert_eq!(KMeansMode::Auto.resolve(50_001), KMeansMode::MiniBatch);
        assert_eq!(KMeansMode::Full.resolve(1_000_000), KMeansMode::Full);
    }

    #[test]
    fn text_round_trip() {
        let (m, _) = blobs(30, 2);
        let mut model = ClusterModel::fit(&m, &KMeansParams::new(3, 2)).unwrap();
        model.stats = Some(ColumnStats { means: vec![0.5, -1.0, 1e-17], stds: vec![1.0, 2.0, 0.0] });
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = ClusterModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.centroids(), model.centroids());
        assert_eq!(back.stats, model.stats);
        assert_eq!(back.seed(), model.seed());
        assert_eq!(back.mode(), model.mode());
    }
}
