//! Acceptance suite. Each test prints one PASS/FAIL/SKIP line; run with
//! `cargo test -p silif-core --test acceptance -- --nocapture`.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::{pairwise_auc, random_instance, spearman, sweep_average_precision, verdict};
use silif_core::dataset::{generate_synthetic, DatasetConfig};
use silif_core::fingerprint::{self, FingerprintMatrix, KMeansMode, KMeansParams};
use silif_core::harness::{self, DataSource, ExperimentConfig, Method, DEFAULT_ALPHAS, DEFAULT_SEEDS};
use silif_core::iforest::{self, c_factor};
use silif_core::metrics::{auc_pr, auc_roc, paired_t_test};
use silif_core::rng::SeededRng;
use silif_core::silif::{self, centroid_contributions, contribution, exact_silhouette, SilifFit, SilifParams};
use silif_core::{baselines, Matrix};

#[test]
fn criterion_01_alpha_zero_recovers_forest_ranking() {
    let start = Instant::now();
    let mut mismatches = 0;
    for seed in DEFAULT_SEEDS {
        let data = generate_synthetic(2000, 70, 6, seed).unwrap();
        let params = SilifParams::default().with_seed(seed).with_alpha(0.0);
        let (scores, forest, _) = silif::silif_score(&data, &params).unwrap();
        let plain = iforest::score(&forest, &data).unwrap();
        if scores.ranking() != plain.ranking() {
            mismatches += 1;
        }
        assert_eq!(data.label_read_count(), 0, "scoring read the labels");
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "SilIF(alpha=0) ranking equals Isolation Forest ranking",
        mismatches == 0 && secs < 10.0,
        &format!("{mismatches} mismatching seeds, {secs:.2}s of 10s"),
    );
}

#[test]
fn criterion_02_silhouette_contribution_range() {
    let mut rng = SeededRng::new(2);
    let mut out_of_range = 0usize;
    let mut checked = 0usize;
    for instance in 0..1000 {
        let n = 4 + rng.below(60);
        let t = 1 + rng.below(12);
        let k = 2 + rng.below(5).min(n - 2);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..t).map(|_| 3.0 * rng.standard_normal()).collect())
            .collect();
        let points = Matrix::from_rows(&rows).unwrap();
        let values = if instance % 2 == 0 {
            // fitted model on standardized fingerprints
            let fp = FingerprintMatrix::raw(points).standardize_columns();
            let params = KMeansParams::new(k, instance as u64).with_mode(if instance % 4 == 0 {
                KMeansMode::Full
            } else {
                KMeansMode::MiniBatch
            });
            let model = fingerprint::kmeans_fit(&fp, &params).unwrap();
            silif::silhouette_contribution(&fp, &model).unwrap().scores
        } else {
            // arbitrary centroids and labels, so a point may sit nearer a rival
            let centroids: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..t).map(|_| 3.0 * rng.standard_normal()).collect())
                .collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
            centroid_contributions(&points, &Matrix::from_rows(&centroids).unwrap(), &labels).unwrap()
        };
        checked += values.len();
        out_of_range += values.iter().filter(|v| !(0.0..=2.0).contains(*v)).count();
    }

    // Boundary cases, through the centroid path as well as the scalar rule.
    let centroids = Matrix::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
    let pts = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.5, 2.0]]).unwrap();
    let v = centroid_contributions(&pts, &centroids, &[0, 1, 0]).unwrap();
    let boundaries = v == [0.0, 2.0, 1.0]
        && contribution(0.0, 1.0) == 0.0
        && contribution(1.0, 0.0) == 2.0
        && contribution(0.7, 0.7) == 1.0;

    verdict(
        2,
        "silhouette contribution stays in [0, 2] with exact boundaries",
        out_of_range == 0 && boundaries,
        &format!("{checked} values, {out_of_range} out of range, boundaries {boundaries}"),
    );
}

#[test]
fn criterion_03_metric_oracles() {
    let start = Instant::now();
    let mut rng = SeededRng::new(3);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let (s, y) = random_instance(&mut rng, 200);
        worst = worst.max((auc_roc(&s, &y).unwrap() - pairwise_auc(&s, &y)).abs());
        worst = worst.max((auc_pr(&s, &y).unwrap() - sweep_average_precision(&s, &y)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        3,
        "AUC-ROC and AUC-PR equal brute-force oracles",
        worst <= 1e-12 && secs < 5.0,
        &format!("max deviation {worst:e}, {secs:.2}s of 5s"),
    );
}

fn exact_c(n: usize) -> f64 {
    let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (n - 1) as f64 / n as f64
}

#[test]
fn criterion_04_c_factor() {
    let c2 = c_factor(2).unwrap();
    let c3 = c_factor(3).unwrap();
    let small = (c2 - 1.0).abs() < 1e-4 && (c3 - 1.6667).abs() < 1e-4;
    let mut worst: f64 = 0.0;
    for n in [1001, 10_000, 1_000_000] {
        let exact = exact_c(n);
        worst = worst.max((c_factor(n).unwrap() - exact).abs() / exact);
    }
    verdict(
        4,
        "c(2), c(3) and the harmonic approximation",
        small && worst < 1e-3,
        &format!("c(2) = {c2}, c(3) = {c3:.6}, worst relative error {worst:e}"),
    );
}

#[test]
fn criterion_05_planted_anomaly_detection() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut passed = 0;
    for seed in DEFAULT_SEEDS {
        let data = generate_synthetic(1000, 35, 6, seed).unwrap();
        let fit = SilifFit::fit(&data, &SilifParams::default().with_seed(seed)).unwrap();
        let labels = data.labels();
        let if_auc = auc_roc(&fit.if_scores.scores, labels).unwrap();
        let sil_auc = auc_roc(&fit.combine(1.0).unwrap().scores, labels).unwrap();
        if if_auc > 0.85 && sil_auc > 0.85 {
            passed += 1;
        }
        lines.push(format!("seed {seed}: IF {if_auc:.4} SilIF {sil_auc:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        5,
        "IF and SilIF(alpha=1) AUC-ROC > 0.85 on planted anomalies",
        passed == 5 && secs < 30.0,
        &format!("{passed}/5 seeds, {secs:.2}s of 30s; {}", lines.join("; ")),
    );
}

#[test]
fn criterion_06_centroid_silhouette_tracks_exact_silhouette() {
    let mut worst = f64::INFINITY;
    let mut rng = SeededRng::new(6);
    let fixtures = [(100, 10), (200, 25), (400, 40), (600, 60), (666, 100)];
    for (i, &(n_per, t)) in fixtures.iter().enumerate() {
        let centers: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..t).map(|j| if j % 3 == c { 8.0 } else { 0.0 } + rng.standard_normal()).collect())
            .collect();
        let raw = common::blobs(&centers, n_per, 1.0, &mut rng);
        let fp = FingerprintMatrix::raw(raw).standardize_columns();
        let model = fingerprint::kmeans_fit(&fp, &KMeansParams::new(3, 40 + i as u64)).unwrap();
        let approx = silif::silhouette_contribution(&fp, &model).unwrap().scores;
        let exact: Vec<f64> = exact_silhouette(fp.values(), model.labels())
            .unwrap()
            .into_iter()
            .map(|s| 1.0 - s)
            .collect();
        worst = worst.min(spearman(&approx, &exact));
    }
    verdict(
        6,
        "centroid contribution vs 1 - exact silhouette, Spearman > 0.9",
        worst > 0.9,
        &format!("minimum Spearman {worst:.4} over {} fixtures (N <= 2000)", fixtures.len()),
    );
}

#[test]
fn criterion_07_hbos_ecod_seed_invariance() {
    let mut config = ExperimentConfig::synthetic(1000, 35, 6);
    config.methods = vec![Method::Hbos, Method::Ecod];
    let table = harness::run_experiment(&config).unwrap();
    let mut worst: f64 = 0.0;
    for agg in table.aggregates() {
        for (_, sd) in agg.metrics.iter().flatten() {
            worst = worst.max(*sd);
        }
    }
    // The score vectors themselves, per seed.
    let data = harness::load_data(&config).unwrap();
    let hbos = baselines::hbos_score(&data, baselines::DEFAULT_BINS).unwrap();
    let ecod = baselines::ecod_score(&data).unwrap();
    let identical = DEFAULT_SEEDS.iter().all(|_| {
        baselines::hbos_score(&data, baselines::DEFAULT_BINS).unwrap() == hbos
            && baselines::ecod_score(&data).unwrap() == ecod
    });
    verdict(
        7,
        "HBOS and ECOD have zero variance across seeds 42-46",
        worst == 0.0 && identical && table.rows.len() == 10,
        &format!("max metric std {worst}, identical score vectors {identical}"),
    );
}

#[test]
fn criterion_08_paired_t_test() {
    let r = paired_t_test(&[1.5, 2.0, 2.5], &[1.0, 1.0, 1.0]).unwrap();
    let hand = (r.t - 3.4641).abs() < 1e-3 && (r.p - 0.0742).abs() < 1e-3;

    let mut rng = SeededRng::new(8);
    let mut antisymmetric = true;
    for _ in 0..100 {
        let n = 2 + rng.below(9);
        let a: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        antisymmetric &= (ab.t + ba.t).abs() <= 1e-12 * ab.t.abs().max(1.0) && (ab.p - ba.p).abs() <= 1e-12;
    }
    verdict(
        8,
        "paired t-test hand example and antisymmetry",
        hand && antisymmetric,
        &format!("t = {:.4}, p = {:.4}, antisymmetric on 100 pairs: {antisymmetric}", r.t, r.p),
    );
}

#[test]
fn criterion_09_harness_determinism() {
    let mut config = ExperimentConfig::synthetic(600, 20, 6);
    config.methods = Method::ALL.to_vec();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for dir in &dirs {
        let table = harness::run_experiment(&config).unwrap();
        let files = harness::emit_report(&table, dir.path()).unwrap();
        outputs.push(std::fs::read(files.results).unwrap());
    }
    let sweep: Vec<Vec<u8>> = dirs
        .iter()
        .map(|dir| {
            let table = harness::alpha_sweep(&config).unwrap();
            let files = harness::emit_report(&table, dir.path().join("sweep")).unwrap();
            std::fs::read(files.results).unwrap()
        })
        .collect();
    let identical = outputs[0] == outputs[1] && sweep[0] == sweep[1];
    verdict(
        9,
        "identical configuration gives byte-identical per-seed results",
        identical && !outputs[0].is_empty(),
        &format!("{} bytes compared, sweep {} bytes", outputs[0].len(), sweep[0].len()),
    );
}

fn dataset_from_env(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.exists())
}

fn sweep_means(path: PathBuf, config: DatasetConfig) -> Vec<(f64, f64)> {
    let mut exp = ExperimentConfig::new(DataSource::Csv { path, config });
    exp.alphas = DEFAULT_ALPHAS.to_vec();
    let table = harness::alpha_sweep(&exp).unwrap();
    DEFAULT_ALPHAS
        .iter()
        .map(|&a| {
            let agg = table.aggregate(Method::Silif, Some(a)).unwrap();
            (a, agg.metrics[1].unwrap().0)
        })
        .collect()
}

#[test]
fn criterion_10_ieee_cis_alpha_sweep_shape() {
    let Some(path) = dataset_from_env("SILIF_IEEE_CIS_CSV") else {
        println!("[SKIP] criterion 10: IEEE-CIS alpha sweep (set SILIF_IEEE_CIS_CSV to train_transaction.csv)");
        return;
    };
    let means = sweep_means(path, DatasetConfig::ieee_cis());
    let pr = |a: f64| means.iter().find(|m| m.0 == a).unwrap().1;
    let delta = pr(1.0) - pr(0.0);
    verdict(
        10,
        "IEEE-CIS inverted-U in alpha and +0.004..+0.012 AUC-PR at alpha=1",
        pr(1.0) > pr(0.0) && pr(4.0) < pr(0.0) && (0.004..=0.012).contains(&delta),
        &format!("mean AUC-PR by alpha {means:?}, delta {delta:+.4}"),
    );
}

#[test]
fn criterion_11_sparkov_monotone_degradation() {
    let Some(path) = dataset_from_env("SILIF_SPARKOV_CSV") else {
        println!("[SKIP] criterion 11: Sparkov alpha sweep (set SILIF_SPARKOV_CSV to fraudTrain.csv)");
        return;
    };
    let means = sweep_means(path, DatasetConfig::sparkov());
    let decreasing = means.windows(2).all(|w| w[1].1 < w[0].1);
    verdict(
        11,
        "Sparkov AUC-PR strictly decreasing in alpha",
        decreasing,
        &format!("mean AUC-PR by alpha {means:?}"),
    );
}
