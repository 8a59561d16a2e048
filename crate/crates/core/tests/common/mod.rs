#![allow(dead_code)]

use silif_core::rng::SeededRng;
use silif_core::Matrix;

/// Brute-force AUC-ROC: wins plus half-ties over every positive/negative pair.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut acc = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                acc += 1.0;
            } else if si == sj {
                acc += 0.5;
            }
        }
    }
    acc / pairs
}

/// Brute-force average precision: for each distinct score taken as a
/// threshold (high to low), recount precision and recall from scratch.
pub fn sweep_average_precision(scores: &[f64], labels: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let selected: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = selected.iter().filter(|&&i| labels[i] == 1).count() as f64;
        let recall = tp / positives;
        let precision = tp / selected.len() as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (midranks(a), midranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let (mut va, mut vb) = (0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

/// `n_per` points around each of `centers`, isotropic noise of scale `sd`.
pub fn blobs(centers: &[Vec<f64>], n_per: usize, sd: f64, rng: &mut SeededRng) -> Matrix {
    let mut rows = Vec::new();
    for c in centers {
        for _ in 0..n_per {
            rows.push(c.iter().map(|m| m + sd * rng.standard_normal()).collect::<Vec<f64>>());
        }
    }
    Matrix::from_rows(&rows).unwrap()
}

/// Random scores (optionally heavily tied) and labels with both classes.
pub fn random_instance(rng: &mut SeededRng, max_n: usize) -> (Vec<f64>, Vec<u8>) {
    let n = 2 + rng.below(max_n - 1);
    let tied = rng.below(2) == 0;
    let scores: Vec<f64> = (0..n)
        .map(|_| if tied { rng.below(5) as f64 } else { rng.uniform() })
        .collect();
    let mut labels: Vec<u8> = (0..n).map(|_| (rng.uniform() < 0.3) as u8).collect();
    labels[0] = 1;
    labels[1] = 0;
    rng.shuffle(&mut labels);
    (scores, labels)
}

pub fn verdict(id: u32, name: &str, passed: bool, detail: &str) {
    println!(
        "[{}] criterion {id:>2}: {name} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {id} failed: {name} ({detail})");
}
