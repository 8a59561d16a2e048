use silif_core::baselines::{self, FeatureScaling};
use silif_core::dataset::generate_synthetic;
use silif_core::fingerprint::{self, KMeansMode};
use silif_core::iforest::{self, score_from_mean_path};
use silif_core::silif::{self, ScoreBasis, SilifFit, SilifParams};
use silif_core::SilifModel;

fn params() -> SilifParams {
    SilifParams {
        n_trees: 40,
        subsample: 128,
        ..SilifParams::default().with_seed(7)
    }
}

#[test]
fn no_scoring_path_reads_labels() {
    let data = generate_synthetic(400, 20, 4, 11).unwrap();
    let p = params();
    SilifFit::fit(&data, &p).unwrap().combine(1.0).unwrap();
    silif::silif_score(&data, &p).unwrap();
    let forest = iforest::fit(&data, 40, 128, 3).unwrap();
    iforest::score(&forest, &data).unwrap();
    fingerprint::extract_fingerprints(&forest, &data).unwrap();
    baselines::hbos_score(&data, baselines::DEFAULT_BINS).unwrap();
    baselines::ecod_score(&data).unwrap();
    baselines::kmeans_distance_score(&data, 8, 3, KMeansMode::Auto, FeatureScaling::ZScore).unwrap();
    baselines::knn_score(&data, 5, FeatureScaling::ZScore).unwrap();
    baselines::lof_score(&data, 20, FeatureScaling::ZScore).unwrap();
    assert_eq!(data.label_read_count(), 0);
    data.labels();
    assert_eq!(data.label_read_count(), 1);
}

#[test]
fn forest_score_is_the_fingerprint_row_mean() {
    let data = generate_synthetic(300, 15, 5, 5).unwrap();
    let forest = iforest::fit(&data, 50, 64, 9).unwrap();
    let scores = iforest::score(&forest, &data).unwrap();
    let fp = fingerprint::extract_fingerprints(&forest, &data).unwrap();
    for (i, row) in fp.values().iter_rows().enumerate() {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        assert_eq!(scores.scores[i], score_from_mean_path(mean, forest.normalizer()));
    }
}

#[test]
fn model_round_trip_scores_identically() {
    let data = generate_synthetic(300, 15, 5, 8).unwrap();
    let fit = SilifFit::fit(&data, &params()).unwrap();
    let batch = fit.combine(1.0).unwrap();
    let model = fit.into_model();
    assert_eq!(model.score(&data, ScoreBasis::Batch).unwrap().scores, batch.scores);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    model.save(&path).unwrap();
    let loaded = SilifModel::load(&path).unwrap();
    for basis in [ScoreBasis::Batch, ScoreBasis::Training] {
        assert_eq!(
            loaded.score(&data, basis).unwrap().scores,
            model.score(&data, basis).unwrap().scores
        );
    }
}

#[test]
fn fixed_seed_is_reproducible_and_seeds_differ() {
    let data = generate_synthetic(300, 15, 5, 8).unwrap();
    let a = silif::silif_score(&data, &params()).unwrap().0;
    let b = silif::silif_score(&data, &params()).unwrap().0;
    let c = silif::silif_score(&data, &params().with_seed(8)).unwrap().0;
    assert_eq!(a.scores, b.scores);
    assert_ne!(a.scores, c.scores);
}
