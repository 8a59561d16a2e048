use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::score::ScoreVector;

/// Sorted training values per feature, for empirical tail probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfModel {
    sorted: Vec<Vec<f64>>,
    skewness: Vec<f64>,
}

/// Biased (Fisher-Pearson) sample skewness; 0 for constant input.
fn skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mu).powi(3)).sum::<f64>() / n;
    if m2 > 0.0 {
        m3 / m2.powf(1.5)
    } else {
        0.0
    }
}

impl EcdfModel {
    pub fn fit(data: &Matrix) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset(""));
        }
        let mut sorted = Vec::with_capacity(data.cols());
        let mut skew = Vec::with_capacity(data.cols());
        for j in 0..data.cols() {
            let mut col = data.column(j);
            skew.push(skewness(&col));
            col.sort_by(f64::total_cmp);
            sorted.push(col);
        }
        Ok(Self {
            sorted,
            skewness: skew,
        })
    }

    fn n(&self) -> f64 {
        self.sorted[0].len() as f64
    }

    /// `#{x_i <= x} / N`, floored at `1/N`.
    pub fn left_tail(&self, j: usize, x: f64) -> f64 {
        let count = self.sorted[j].partition_point(|&v| v <= x);
        count.max(1) as f64 / self.n()
    }

    /// `#{x_i >= x} / N`, floored at `1/N`.
    pub fn right_tail(&self, j: usize, x: f64) -> f64 {
        let below = self.sorted[j].partition_point(|&v| v < x);
        (self.sorted[j].len() - below).max(1) as f64 / self.n()
    }

    /// `max(O_left, O_right, O_skew)` where each term sums `-ln` tail
    /// probabilities over features, and `O_skew` takes the left tail for
    /// negatively skewed features and the right tail otherwise.
    pub fn score(&self, data: &Matrix) -> Result<Vec<f64>> {
        if data.cols() != self.sorted.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sorted.len(),
                actual: data.cols(),
            });
        }
        Ok(data
            .iter_rows()
            .map(|row| {
                let (mut left, mut right, mut skew) = (0.0, 0.0, 0.0);
                for (j, &x) in row.iter().enumerate() {
                    let l = -self.left_tail(j, x).ln();
                    let r = -self.right_tail(j, x).ln();
                    left += l;
                    right += r;
                    skew += if self.skewness[j] < 0.0 { l } else { r };
                }
                left.max(right).max(skew)
            })
            .collect())
    }
}

pub fn ecod_score(data: &Dataset) -> Result<ScoreVector> {
    let model = EcdfModel::fit(data.features())?;
    Ok(ScoreVector::new("ecod", model.score(data.features())?))
}
