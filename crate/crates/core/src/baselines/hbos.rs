use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::score::ScoreVector;

pub const DEFAULT_BINS: usize = 20;
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Histogram {
    min: f64,
    width: f64,
    densities: Vec<f64>,
}

impl Histogram {
    fn bin(&self, x: f64) -> usize {
        let last = self.densities.len() - 1;
        if self.width <= 0.0 {
            return 0;
        }
        let b = ((x - self.min) / self.width).floor();
        if b <= 0.0 {
            0
        } else {
            (b as usize).min(last)
        }
    }
}

/// Static equal-width histograms, one per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramModel {
    features: Vec<Histogram>,
}

impl HistogramModel {
    pub fn fit(data: &Matrix, n_bins: usize) -> Result<Self> {
        if n_bins < 1 {
            return Err(Error::invalid("HBOS needs at least one bin"));
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset(""));
        }
        let n = data.rows() as f64;
        let features = (0..data.cols())
            .map(|j| {
                let col = data.column(j);
                let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if max <= min {
                    // A constant feature scores every point alike.
                    return Histogram {
                        min,
                        width: 0.0,
                        densities: vec![1.0; n_bins],
                    };
                }
                let width = (max - min) / n_bins as f64;
                let mut h = Histogram {
                    min,
                    width,
                    densities: vec![0.0; n_bins],
                };
                for &x in &col {
                    let b = h.bin(x);
                    h.densities[b] += 1.0;
                }
                h.densities.iter_mut().for_each(|c| *c /= n * width);
                h
            })
            .collect();
        Ok(Self { features })
    }

    /// Bin edges of feature `j` (`n_bins + 1` values).
    pub fn edges(&self, j: usize) -> Vec<f64> {
        let h = &self.features[j];
        (0..=h.densities.len()).map(|b| h.min + b as f64 * h.width).collect()
    }

    pub fn densities(&self, j: usize) -> &[f64] {
        &self.features[j].densities
    }

    /// `sum_j -ln(max(density_j(x_j), 1e-12))`. Values outside the fitted
    /// range use the nearest boundary bin.
    pub fn score(&self, data: &Matrix) -> Result<Vec<f64>> {
        if data.cols() != self.features.len() {
            return Err(Error::DimensionMismatch {
                expected: self.features.len(),
                actual: data.cols(),
            });
        }
        Ok(data
            .iter_rows()
            .map(|row| {
                row.iter()
                    .zip(&self.features)
                    .map(|(&x, h)| -h.densities[h.bin(x)].max(DENSITY_FLOOR).ln())
                    .sum()
            })
            .collect())
    }
}

pub fn hbos_score(data: &Dataset, n_bins: usize) -> Result<ScoreVector> {
    let model = HistogramModel::fit(data.features(), n_bins)?;
    Ok(ScoreVector::new("hbos", model.score(data.features())?).with_param("bins", n_bins))
}
