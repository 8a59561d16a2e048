//! Multi-seed experiment protocol: fit every method on every seed, score,
//! evaluate against the labels, and pair SilIF against the rest with
//! per-seed t-tests.

mod report;

pub use report::{emit_report, read_results_csv, ReportFiles};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use crate::baselines::{self, FeatureScaling};
use crate::dataset::{self, Dataset, DatasetConfig};
use crate::error::{Error, Result};
use crate::iforest::{self, ForestParams};
use crate::metrics::{self, mean, sample_std};
use crate::score::ScoreVector;
use crate::silif::{SilifFit, SilifParams};

pub const DEFAULT_SEEDS: [u64; 5] = [42, 43, 44, 45, 46];
pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
pub const PRECISION_KS: [usize; 4] = [50, 100, 500, 1000];
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    IForest,
    Silif,
    Hbos,
    Ecod,
    KMeans,
    Lof,
    Knn,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::IForest,
        Method::Silif,
        Method::Hbos,
        Method::Ecod,
        Method::KMeans,
        Method::Lof,
        Method::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::IForest => "iforest",
            Method::Silif => "silif",
            Method::Hbos => "hbos",
            Method::Ecod => "ecod",
            Method::KMeans => "kmeans",
            Method::Lof => "lof",
            Method::Knn => "knn",
        }
    }

    /// Subject to the brute-force neighbor size guard.
    pub fn is_guarded(self) -> bool {
        matches!(self, Method::Lof | Method::Knn)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .or(match lower.as_str() {
                "if" | "isolation-forest" => Some(Method::IForest),
                "k-means" | "global-kmeans" => Some(Method::KMeans),
                "k-nn" => Some(Method::Knn),
                _ => None,
            })
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        config: DatasetConfig,
    },
    Synthetic {
        n_normal: usize,
        n_anomaly: usize,
        dims: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub methods: Vec<Method>,
    /// SilIF settings; `alpha` is the weight used by [`run_experiment`].
    pub silif: SilifParams,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Seeded uniform row subsample applied after loading.
    pub subsample_rows: Option<usize>,
    pub scaling: FeatureScaling,
    pub hbos_bins: usize,
    pub kmeans_k: usize,
    pub knn_k: usize,
    pub lof_k: usize,
}

impl ExperimentConfig {
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            methods: vec![Method::IForest, Method::Silif],
            silif: SilifParams::default(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            subsample_rows: None,
            scaling: FeatureScaling::ZScore,
            hbos_bins: baselines::DEFAULT_BINS,
            kmeans_k: baselines::DEFAULT_KMEANS_K,
            knn_k: baselines::DEFAULT_KNN_K,
            lof_k: baselines::DEFAULT_LOF_K,
        }
    }

    pub fn synthetic(n_normal: usize, n_anomaly: usize, dims: usize) -> Self {
        Self::new(DataSource::Synthetic {
            n_normal,
            n_anomaly,
            dims,
            seed: DEFAULT_SEEDS[0],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Config("alphas must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn validate_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.alphas.is_empty() {
            return Err(Error::Config("alpha list is empty".into()));
        }
        if !self.alphas.contains(&0.0) {
            return Err(Error::Config(
                "alpha sweep must include 0 so the plain-forest anchor is present".into(),
            ));
        }
        Ok(())
    }

    /// Flat description of the run, written alongside the reports.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        match &self.source {
            DataSource::Csv { path, config } => {
                m.insert("data".into(), path.display().to_string());
                m.insert("min_transactions".into(), config.min_transactions.to_string());
            }
            DataSource::Synthetic {
                n_normal,
                n_anomaly,
                dims,
                seed,
            } => {
                m.insert("data".into(), format!("synthetic:{n_normal},{n_anomaly},{dims}"));
                m.insert("data_seed".into(), seed.to_string());
            }
        }
        let join = |v: Vec<String>| v.join(" ");
        m.insert("methods".into(), join(self.methods.iter().map(|x| x.to_string()).collect()));
        m.insert("alphas".into(), join(self.alphas.iter().map(|x| x.to_string()).collect()));
        m.insert("seeds".into(), join(self.seeds.iter().map(|x| x.to_string()).collect()));
        m.insert("alpha".into(), self.silif.alpha.to_string());
        m.insert("trees".into(), self.silif.n_trees.to_string());
        m.insert("subsample".into(), self.silif.subsample.to_string());
        m.insert("k".into(), self.silif.k.to_string());
        m.insert("kmeans_mode".into(), self.silif.kmeans_mode.as_str().into());
        m.insert("batch_size".into(), self.silif.batch_size.to_string());
        m.insert(
            "subsample_rows".into(),
            self.subsample_rows.map_or(String::new(), |n| n.to_string()),
        );
        m.insert("distance_scaling".into(), self.scaling.as_str().into());
        m.insert("hbos_bins".into(), self.hbos_bins.to_string());
        m.insert("kmeans_k".into(), self.kmeans_k.to_string());
        m.insert("knn_k".into(), self.knn_k.to_string());
        m.insert("lof_k".into(), self.lof_k.to_string());
        m.insert("auc_pr".into(), "average_precision".into());
        m.insert("std".into(), "sample".into());
        m
    }
}

pub fn load_data(config: &ExperimentConfig) -> Result<Dataset> {
    let data = match &config.source {
        DataSource::Csv { path, config } => dataset::load_dataset(path, config)?,
        DataSource::Synthetic {
            n_normal,
            n_anomaly,
            dims,
            seed,
        } => dataset::generate_synthetic(*n_normal, *n_anomaly, *dims, *seed)?,
    };
    Ok(match config.subsample_rows {
        Some(n) => {
            let seed = config.seeds.first().copied().unwrap_or(DEFAULT_SEEDS[0]);
            data.subsample_rows(n, seed)
        }
        None => data,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// Not run: N exceeds the brute-force neighbor limit.
    SkippedGuard,
    Failed(String),
}

impl RowStatus {
    pub fn as_string(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::SkippedGuard => "skipped-guard".into(),
            RowStatus::Failed(msg) => format!("failed: {msg}"),
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "ok" => RowStatus::Ok,
            "skipped-guard" => RowStatus::SkippedGuard,
            other => RowStatus::Failed(other.strip_prefix("failed: ").unwrap_or(other).to_owned()),
        }
    }
}

/// Metrics of one (method, alpha, seed) run. Metrics are `None` when the
/// run did not complete or, for precision@k, when `k > N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub method: Method,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
    pub precision_at: [Option<f64>; 4],
    pub seconds: f64,
    pub status: RowStatus,
}

impl EvalResult {
    fn empty(method: Method, alpha: Option<f64>, seed: u64, status: RowStatus) -> Self {
        Self {
            method,
            alpha,
            seed,
            auc_roc: None,
            auc_pr: None,
            precision_at: [None; 4],
            seconds: 0.0,
            status,
        }
    }

    fn sort_key(&self) -> (Method, f64, u64) {
        (self.method, self.alpha.unwrap_or(f64::NEG_INFINITY), self.seed)
    }
}

/// Scores `scores` against `labels`.
pub fn evaluate(
    scores: &ScoreVector,
    labels: &[u8],
    method: Method,
    alpha: Option<f64>,
    seed: u64,
    seconds: f64,
) -> EvalResult {
    let s = &scores.scores;
    let computed = metrics::auc_roc(s, labels).and_then(|roc| Ok((roc, metrics::auc_pr(s, labels)?)));
    match computed {
        Ok((roc, pr)) => {
            let mut precision_at = [None; 4];
            for (slot, &k) in precision_at.iter_mut().zip(&PRECISION_KS) {
                *slot = metrics::precision_at_k(s, labels, k).ok();
            }
            EvalResult {
                method,
                alpha,
                seed,
                auc_roc: Some(roc),
                auc_pr: Some(pr),
                precision_at,
                seconds,
                status: RowStatus::Ok,
            }
        }
        Err(e) => EvalResult {
            seconds,
            ..EvalResult::empty(method, alpha, seed, RowStatus::Failed(e.to_string()))
        },
    }
}

/// SilIF against another method on a per-seed metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub method_a: Method,
    pub alpha_a: Option<f64>,
    pub method_b: Method,
    pub alpha_b: Option<f64>,
    pub metric: String,
    pub seeds: Vec<u64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mean_difference: f64,
    pub wins: usize,
    pub t: f64,
    pub p: f64,
    pub degenerate: bool,
}

impl PairedComparison {
    pub fn wins_label(&self) -> String {
        format!("{}/{}", self.wins, self.seeds.len())
    }
}

/// Pairs AUC-PR of `(a, alpha_a)` with `(b, alpha_b)` over seeds where both
/// completed. `None` when fewer than two seeds pair up.
pub fn compare(
    rows: &[EvalResult],
    a: (Method, Option<f64>),
    b: (Method, Option<f64>),
) -> Option<PairedComparison> {
    let pick = |m: Method, alpha: Option<f64>| -> BTreeMap<u64, f64> {
        rows.iter()
            .filter(|r| r.method == m && r.alpha == alpha)
            .filter_map(|r| r.auc_pr.map(|v| (r.seed, v)))
            .collect()
    };
    let left = pick(a.0, a.1);
    let right = pick(b.0, b.1);
    let seeds: Vec<u64> = left.keys().filter(|s| right.contains_key(s)).copied().collect();
    let av: Vec<f64> = seeds.iter().map(|s| left[s]).collect();
    let bv: Vec<f64> = seeds.iter().map(|s| right[s]).collect();
    let test = metrics::paired_t_test(&av, &bv).ok()?;
    Some(PairedComparison {
        method_a: a.0,
        alpha_a: a.1,
        method_b: b.0,
        alpha_b: b.1,
        metric: "auc_pr".into(),
        seeds,
        a: av,
        b: bv,
        mean_difference: test.mean_difference,
        wins: test.wins,
        t: test.t,
        p: test.p,
        degenerate: test.degenerate,
    })
}

/// Mean and sample std of each metric over seeds for one (method, alpha).
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub alpha: Option<f64>,
    pub n: usize,
    /// `(mean, std)` for auc_roc, auc_pr, p@50, p@100, p@500, p@1000.
    pub metrics: [Option<(f64, f64)>; 6],
}

fn summarize(values: &[f64]) -> Option<(f64, f64)> {
    (!values.is_empty()).then(|| (mean(values), sample_std(values)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<EvalResult>,
    pub paired: Vec<PairedComparison>,
    pub config: BTreeMap<String, String>,
    pub version: String,
}

impl ResultsTable {
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut groups: Vec<(Method, Option<f64>)> = Vec::new();
        for r in &self.rows {
            if !groups.contains(&(r.method, r.alpha)) {
                groups.push((r.method, r.alpha));
            }
        }
        groups
            .into_iter()
            .map(|(method, alpha)| {
                let done: Vec<&EvalResult> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.alpha == alpha && r.status == RowStatus::Ok)
                    .collect();
                let column = |f: &dyn Fn(&EvalResult) -> Option<f64>| -> Option<(f64, f64)> {
                    let v: Vec<f64> = done.iter().filter_map(|r| f(r)).collect();
                    summarize(&v)
                };
                Aggregate {
                    method,
                    alpha,
                    n: done.len(),
                    metrics: [
                        column(&|r| r.auc_roc),
                        column(&|r| r.auc_pr),
                        column(&|r| r.precision_at[0]),
                        column(&|r| r.precision_at[1]),
                        column(&|r| r.precision_at[2]),
                        column(&|r| r.precision_at[3]),
                    ],
                }
            })
            .collect()
    }

    pub fn aggregate(&self, method: Method, alpha: Option<f64>) -> Option<Aggregate> {
        self.aggregates()
            .into_iter()
            .find(|a| a.method == method && a.alpha == alpha)
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> (Result<T>, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn run_method(config: &ExperimentConfig, data: &Dataset, method: Method, seed: u64) -> Result<ScoreVector> {
    let x = data;
    match method {
        Method::IForest => {
            let p = ForestParams {
                n_trees: config.silif.n_trees,
                subsample: config.silif.subsample,
                seed,
            };
            iforest::Forest::fit(x.features(), &p)?.score_matrix(x.features())
        }
        Method::Silif => {
            let params = config.silif.with_seed(seed);
            SilifFit::fit(x, &params)?.combine(params.alpha)
        }
        Method::Hbos => baselines::hbos_score(x, config.hbos_bins),
        Method::Ecod => baselines::ecod_score(x),
        Method::KMeans => baselines::kmeans_distance_score(
            x,
            config.kmeans_k,
            seed,
            config.silif.kmeans_mode,
            config.scaling,
        ),
        Method::Lof => baselines::lof_score(x, config.lof_k, config.scaling),
        Method::Knn => baselines::knn_score(x, config.knn_k, config.scaling),
    }
}

fn sort_rows(rows: &mut [EvalResult]) {
    rows.sort_by(|a, b| {
        let (ma, aa, sa) = a.sort_key();
        let (mb, ab, sb) = b.sort_key();
        ma.cmp(&mb).then(aa.total_cmp(&ab)).then(sa.cmp(&sb))
    });
}

/// Every configured method on every seed, evaluated against the labels.
/// SilIF rows carry `config.silif.alpha`; a failing method is recorded in
/// its row and the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let data = load_data(config)?;
    run_experiment_on(config, &data)
}

/// [`run_experiment`] on an already loaded dataset.
pub fn run_experiment_on(config: &ExperimentConfig, data: &Dataset) -> Result<ResultsTable> {
    config.validate()?;
    let n = data.len();
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        for &method in &config.methods {
            let alpha = (method == Method::Silif).then_some(config.silif.alpha);
            if method.is_guarded() && n > baselines::NEIGHBOR_LIMIT {
                log::info!("{method}: N = {n} exceeds {}, skipped", baselines::NEIGHBOR_LIMIT);
                rows.push(EvalResult::empty(method, alpha, seed, RowStatus::SkippedGuard));
                continue;
            }
            let (scores, seconds) = timed(|| run_method(config, data, method, seed));
            rows.push(match scores {
                Ok(s) => evaluate(&s, data.labels(), method, alpha, seed, seconds),
                Err(e) => {
                    log::warn!("{method} seed {seed}: {e}");
                    EvalResult {
                        seconds,
                        ..EvalResult::empty(method, alpha, seed, RowStatus::Failed(e.to_string()))
                    }
                }
            });
        }
    }
    sort_rows(&mut rows);

    let mut paired = Vec::new();
    if config.methods.contains(&Method::Silif) {
        let silif = (Method::Silif, Some(config.silif.alpha));
        for &other in &config.methods {
            if other != Method::Silif {
                paired.extend(compare(&rows, silif, (other, None)));
            }
        }
    }

    Ok(ResultsTable {
        rows,
        paired,
        config: config.snapshot(),
        version: VERSION.to_owned(),
    })
}

/// SilIF at every alpha on every seed. The forest and cluster model are
/// fitted once per seed and reused across alphas, which only change the
/// final blend; results equal a per-alpha refit.
pub fn alpha_sweep(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate_sweep()?;
    let data = load_data(config)?;
    alpha_sweep_on(config, &data)
}

pub fn alpha_sweep_on(config: &ExperimentConfig, data: &Dataset) -> Result<ResultsTable> {
    config.validate_sweep()?;
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let params = config.silif.with_seed(seed);
        let (fit, fit_seconds) = timed(|| SilifFit::fit(data, &params));
        match fit {
            Ok(fit) => {
                for &alpha in &config.alphas {
                    let (scores, blend_seconds) = timed(|| fit.combine(alpha));
                    let seconds = fit_seconds + blend_seconds;
                    rows.push(match scores {
                        Ok(s) => evaluate(&s, data.labels(), Method::Silif, Some(alpha), seed, seconds),
                        Err(e) => EvalResult {
                            seconds,
                            ..EvalResult::empty(Method::Silif, Some(alpha), seed, RowStatus::Failed(e.to_string()))
                        },
                    });
                }
            }
            Err(e) => {
                log::warn!("silif seed {seed}: {e}");
                for &alpha in &config.alphas {
                    rows.push(EvalResult {
                        seconds: fit_seconds,
                        ..EvalResult::empty(Method::Silif, Some(alpha), seed, RowStatus::Failed(e.to_string()))
                    });
                }
            }
        }
    }
    sort_rows(&mut rows);

    let anchor = (Method::Silif, Some(0.0));
    let paired = config
        .alphas
        .iter()
        .filter(|&&a| a != 0.0)
        .filter_map(|&a| compare(&rows, (Method::Silif, Some(a)), anchor))
        .collect();

    Ok(ResultsTable {
        rows,
        paired,
        config: config.snapshot(),
        version: VERSION.to_owned(),
    })
}
