//! Brute-force neighbor detectors: mean k-NN distance and LOF.

use rayon::prelude::*;

use super::FeatureScaling;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{distance, Matrix};
use crate::score::ScoreVector;

pub const DEFAULT_KNN_K: usize = 5;
pub const DEFAULT_LOF_K: usize = 20;
/// Largest N the quadratic neighbor search accepts.
pub const NEIGHBOR_LIMIT: usize = 100_000;
const LRD_FLOOR: f64 = 1e-12;

fn check(n: usize, k: usize) -> Result<()> {
    if n > NEIGHBOR_LIMIT {
        return Err(Error::SizeGuard {
            n,
            limit: NEIGHBOR_LIMIT,
        });
    }
    if k < 1 || k >= n {
        return Err(Error::invalid(format!("neighbor count k = {k} must satisfy 1 <= k < N = {n}")));
    }
    Ok(())
}

/// Distances from `i` to every other row, with the `k` nearest moved to
/// the front in ascending `(distance, index)` order.
fn partial_neighbors(points: &Matrix, i: usize, k: usize) -> Vec<(f64, usize)> {
    let x = points.row(i);
    let mut d: Vec<(f64, usize)> = (0..points.rows())
        .filter(|&j| j != i)
        .map(|j| (distance(x, points.row(j)), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
    }
    d[..k].sort_by(cmp);
    d
}

/// The `k` nearest-neighbor distances of every row (self excluded), ascending.
pub fn knn_distances(points: &Matrix, k: usize) -> Result<Vec<Vec<f64>>> {
    check(points.rows(), k)?;
    Ok((0..points.rows())
        .into_par_iter()
        .map(|i| partial_neighbors(points, i, k)[..k].iter().map(|p| p.0).collect())
        .collect())
}

/// Mean distance to the `k` nearest neighbors.
pub fn knn_score(data: &Dataset, k: usize, scaling: FeatureScaling) -> Result<ScoreVector> {
    let x = scaling.apply(data.features());
    let scores = knn_distances(&x, k)?
        .into_iter()
        .map(|d| d.iter().sum::<f64>() / k as f64)
        .collect();
    Ok(ScoreVector::new("knn", scores)
        .with_param("k", k)
        .with_param("scaling", scaling.as_str()))
}

/// Local outlier factor with tie-inclusive k-neighborhoods.
pub fn lof_values(points: &Matrix, k: usize) -> Result<Vec<f64>> {
    let n = points.rows();
    check(n, k)?;
    // (k-distance, neighbors within it)
    let hoods: Vec<(f64, Vec<(f64, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = partial_neighbors(points, i, k);
            let kdist = d[k - 1].0;
            let mut hood: Vec<(f64, usize)> = d.into_iter().filter(|p| p.0 <= kdist).collect();
            hood.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            (kdist, hood)
        })
        .collect();

    let lrd: Vec<f64> = hoods
        .par_iter()
        .map(|(_, hood)| {
            let reach: f64 = hood.iter().map(|&(d, o)| d.max(hoods[o].0)).sum();
            let mean_reach = reach / hood.len() as f64;
            1.0 / mean_reach.max(LRD_FLOOR)
        })
        .collect();

    Ok(hoods
        .par_iter()
        .enumerate()
        .map(|(i, (_, hood))| {
            let mean_lrd = hood.iter().map(|&(_, o)| lrd[o]).sum::<f64>() / hood.len() as f64;
            mean_lrd / lrd[i]
        })
        .collect())
}

pub fn lof_score(data: &Dataset, k: usize, scaling: FeatureScaling) -> Result<ScoreVector> {
    let x = scaling.apply(data.features());
    Ok(ScoreVector::new("lof", lof_values(&x, k)?)
        .with_param("k", k)
        .with_param("scaling", scaling.as_str()))
}
