//! Ranking metrics and the paired t-test used to compare detectors.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::score::descending_order;

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    (pos, labels.len() - pos)
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    Ok(())
}

/// Runs of equal scores in descending order, as index slices.
fn tie_blocks(scores: &[f64]) -> Vec<Vec<usize>> {
    let order = descending_order(scores);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match blocks.last_mut() {
            Some(b) if scores[b[0]] == scores[i] => b.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Area under the ROC curve via the Mann-Whitney rank statistic; tied
/// scores contribute one half.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass("AUC-ROC needs positives and negatives"));
    }
    // Ascending midranks: walk blocks from the lowest score up.
    let mut blocks = tie_blocks(scores);
    blocks.reverse();
    let mut next_rank = 1.0;
    let mut pos_rank_sum = 0.0;
    for block in &blocks {
        let len = block.len() as f64;
        let midrank = next_rank + (len - 1.0) / 2.0;
        let block_pos = block.iter().filter(|&&i| labels[i] == 1).count() as f64;
        pos_rank_sum += midrank * block_pos;
        next_rank += len;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision, `sum_k (R_k - R_{k-1}) P_k`, over a descending
/// threshold sweep that admits tied scores together.
pub fn auc_pr(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::SingleClass("AUC-PR needs at least one positive"));
    }
    let total = pos as f64;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for block in tie_blocks(scores) {
        seen += block.len();
        tp += block.iter().filter(|&&i| labels[i] == 1).count();
        let recall = tp as f64 / total;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Share of positives among the `k` highest scores. Ties keep the lower
/// original index first.
pub fn precision_at_k(scores: &[f64], labels: &[u8], k: usize) -> Result<f64> {
    check_lengths(scores, labels)?;
    if k == 0 || k > scores.len() {
        return Err(Error::invalid(format!(
            "precision@k needs 1 <= k <= N, got k = {k}, N = {}",
            scores.len()
        )));
    }
    let hits = descending_order(scores)
        .into_iter()
        .take(k)
        .filter(|&i| labels[i] == 1)
        .count();
    Ok(hits as f64 / k as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

// Sum of squared deviations, computed on values shifted by the first one so
// that identical inputs give exactly 0.
fn squared_deviations(values: &[f64]) -> f64 {
    let Some(&origin) = values.first() else {
        return 0.0;
    };
    let shifted: Vec<f64> = values.iter().map(|v| v - origin).collect();
    let mu = mean(&shifted);
    shifted.iter().map(|d| (d - mu) * (d - mu)).sum()
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    (squared_deviations(values) / values.len() as f64).sqrt()
}

/// Sample (n - 1) standard deviation; 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (squared_deviations(values) / (values.len() - 1) as f64).sqrt()
}

/// `(v - mean) / population std`; a constant input maps to zeros.
pub fn zscore(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mu = mean(values);
    let sd = population_std(values);
    if sd > 0.0 {
        values.iter().map(|v| (v - mu) / sd).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom, via the regularized incomplete beta function
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    /// Seeds where `a > b`.
    pub wins: usize,
    pub n: usize,
    pub mean_difference: f64,
    /// Zero variance with a nonzero mean: `t` is infinite and `p = 0`.
    pub degenerate: bool,
}

/// Paired t-test on per-seed values.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let wins = d.iter().filter(|&&v| v > 0.0).count();
    let mean_difference = mean(&d);
    let sd = sample_std(&d);
    let (t, p, degenerate) = if sd > 0.0 {
        let t = mean_difference / (sd / (n as f64).sqrt());
        (t, student_t_two_sided_p(t, (n - 1) as f64), false)
    } else if mean_difference == 0.0 {
        (0.0, 1.0, false)
    } else {
        (f64::INFINITY.copysign(mean_difference), 0.0, true)
    };
    Ok(TTest {
        t,
        p,
        wins,
        n,
        mean_difference,
        degenerate,
    })
}
