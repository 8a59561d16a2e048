use std::collections::BTreeMap;
use std::fmt::Display;

/// Per-point anomaly scores. Every detector in the crate orients its output
/// so that a larger value means more anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub method: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

impl ScoreVector {
    pub fn new(method: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            scores,
            method: method.into(),
            params: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Display) -> Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    pub fn all_finite(&self) -> bool {
        self.scores.iter().all(|s| s.is_finite())
    }

    /// Point indices from most to least anomalous; ties keep index order.
    pub fn ranking(&self) -> Vec<usize> {
        descending_order(&self.scores)
    }
}

/// Stable descending argsort.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}
