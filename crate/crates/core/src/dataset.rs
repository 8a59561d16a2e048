//! CSV ingestion, transaction preprocessing and the seeded synthetic generator.
//!
//! The per-transaction representation is six columns: sign-log amount, the
//! frequency-rank code of the transaction type, and four sign-log numeric
//! columns chosen per source. Labels ride along for evaluation only; see
//! [`Dataset::labels`].

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;

pub const NUMERIC_FEATURES: usize = 4;

fn default_min_transactions() -> usize {
    5
}

/// Column mapping for a transaction CSV.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub amount_column: String,
    pub type_column: String,
    pub numeric_columns: Vec<String>,
    #[serde(default)]
    pub customer_column: Option<String>,
    pub label_column: String,
    #[serde(default = "default_min_transactions")]
    pub min_transactions: usize,
}

impl DatasetConfig {
    /// IEEE-CIS Fraud Detection (`train_transaction.csv`).
    pub fn ieee_cis() -> Self {
        Self {
            amount_column: "TransactionAmt".into(),
            type_column: "ProductCD".into(),
            numeric_columns: ["C1", "C2", "C13", "C14"].map(String::from).to_vec(),
            customer_column: Some("card1".into()),
            label_column: "isFraud".into(),
            min_transactions: 5,
        }
    }

    /// Sparkov simulated transactions (`fraudTrain.csv` / `fraudTest.csv`).
    pub fn sparkov() -> Self {
        Self {
            amount_column: "amt".into(),
            type_column: "category".into(),
            numeric_columns: ["lat", "long", "merch_lat", "merch_long"]
                .map(String::from)
                .to_vec(),
            customer_column: Some("cc_num".into()),
            label_column: "is_fraud".into(),
            min_transactions: 5,
        }
    }

    /// Parses a flat `key = value` file (TOML syntax).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.numeric_columns.len() != NUMERIC_FEATURES {
            return Err(Error::Config(format!(
                "expected exactly {NUMERIC_FEATURES} numeric columns, got {}",
                self.numeric_columns.len()
            )));
        }
        if self.min_transactions < 1 {
            return Err(Error::Config("min_transactions must be at least 1".into()));
        }
        Ok(())
    }

    /// Columns kept by [`load_csv`], in storage order.
    pub fn columns(&self) -> Vec<&str> {
        let mut cols = vec![self.amount_column.as_str(), self.type_column.as_str()];
        cols.extend(self.numeric_columns.iter().map(String::as_str));
        if let Some(c) = &self.customer_column {
            cols.push(c);
        }
        cols.push(&self.label_column);
        cols
    }
}

/// String cells for the configured columns, with their source line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub lines: Vec<u64>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    fn filtered(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (i, (row, line)) in self.rows.iter().zip(&self.lines).enumerate() {
            if keep(i) {
                rows.push(row.clone());
                lines.push(*line);
            }
        }
        Self {
            columns: self.columns.clone(),
            rows,
            lines,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, config: &DatasetConfig) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, config)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, config: &DatasetConfig) -> Result<RawTable> {
    config.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let wanted = config.columns();
    let mut positions = Vec::with_capacity(wanted.len());
    for name in &wanted {
        let pos = header
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::MissingColumn((*name).to_owned()))?;
        positions.push(pos);
    }

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(positions.iter().map(|&p| record[p].to_owned()).collect());
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(" (no data rows)"));
    }
    Ok(RawTable {
        columns: wanted.into_iter().map(String::from).collect(),
        rows,
        lines,
    })
}

/// `sign(x) * ln(1 + |x|)`.
pub fn sign_log(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(sign_log_unchecked(x))
}

#[inline]
fn sign_log_unchecked(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

/// Drops every row belonging to a customer with fewer than
/// `min_transactions` rows. Without a customer column this is the identity.
pub fn filter_customers(raw: &RawTable, config: &DatasetConfig) -> Result<RawTable> {
    let Some(customer) = &config.customer_column else {
        return Ok(raw.clone());
    };
    let col = raw.column_index(customer)?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for row in &raw.rows {
        *counts.entry(row[col].trim()).or_default() += 1;
    }
    Ok(raw.filtered(|i| counts[raw.rows[i][col].trim()] >= config.min_transactions))
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "null" | "NULL")
}

fn parse_numeric(cell: &str, column: &str, line: u64) -> Result<f64> {
    let cell = cell.trim();
    if is_missing(cell) {
        return Ok(0.0);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric {
            column: column.to_owned(),
            line,
            value: cell.to_owned(),
        }),
    }
}

fn parse_label(cell: &str, column: &str, line: u64) -> Result<u8> {
    match cell.trim() {
        "1" | "1.0" | "true" | "True" | "TRUE" => Ok(1),
        "0" | "0.0" | "false" | "False" | "FALSE" => Ok(0),
        other => Err(Error::BadLabel {
            column: column.to_owned(),
            line,
            value: other.to_owned(),
        }),
    }
}

/// Category -> code, most frequent first, ties broken lexicographically.
pub fn frequency_rank_encoding<'a>(
    values: impl IntoIterator<Item = &'a str>,
) -> HashMap<String, usize> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut cats: Vec<(&str, usize)> = counts.into_iter().collect();
    cats.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    cats.into_iter()
        .enumerate()
        .map(|(rank, (name, _))| (name.to_owned(), rank))
        .collect()
}

fn customer_ids(cells: &[&str]) -> Vec<i64> {
    let parsed: Option<Vec<i64>> = cells.iter().map(|c| c.parse::<i64>().ok()).collect();
    if let Some(ids) = parsed {
        return ids;
    }
    // Non-integer identifiers are interned in order of first appearance.
    let mut interned: HashMap<&str, i64> = HashMap::new();
    cells
        .iter()
        .map(|c| {
            let next = interned.len() as i64;
            *interned.entry(c).or_insert(next)
        })
        .collect()
}

pub fn preprocess(raw: &RawTable, config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    let table = filter_customers(raw, config)?;
    if table.is_empty() {
        return Err(Error::EmptyDataset(" after customer filtering"));
    }

    let amount = table.column_index(&config.amount_column)?;
    let kind = table.column_index(&config.type_column)?;
    let numerics: Vec<usize> = config
        .numeric_columns
        .iter()
        .map(|c| table.column_index(c))
        .collect::<Result<_>>()?;
    let label = table.column_index(&config.label_column)?;

    let encoding = frequency_rank_encoding(table.rows.iter().map(|r| r[kind].trim()));

    let d = 2 + NUMERIC_FEATURES;
    let mut data = Vec::with_capacity(table.len() * d);
    let mut labels = Vec::with_capacity(table.len());
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        data.push(sign_log_unchecked(parse_numeric(
            &row[amount],
            &config.amount_column,
            line,
        )?));
        data.push(encoding[row[kind].trim()] as f64);
        for (&col, name) in numerics.iter().zip(&config.numeric_columns) {
            data.push(sign_log_unchecked(parse_numeric(&row[col], name, line)?));
        }
        labels.push(parse_label(&row[label], &config.label_column, line)?);
    }

    let customers = match &config.customer_column {
        Some(c) => {
            let col = table.column_index(c)?;
            let cells: Vec<&str> = table.rows.iter().map(|r| r[col].trim()).collect();
            Some(customer_ids(&cells))
        }
        None => None,
    };

    let mut names = vec![
        format!("log_{}", config.amount_column),
        format!("{}_code", config.type_column),
    ];
    names.extend(config.numeric_columns.iter().map(|c| format!("log_{c}")));

    let features = Matrix::new(table.len(), d, data)?;
    let mut ds = Dataset::new(features, labels, names)?;
    ds.customer_ids = customers;
    Ok(ds)
}

/// Loads, filters and preprocesses in one step.
pub fn load_dataset(path: impl AsRef<Path>, config: &DatasetConfig) -> Result<Dataset> {
    let raw = load_csv(path, config)?;
    preprocess(&raw, config)
}

/// Feature matrix plus evaluation labels.
///
/// Scoring code only touches [`Dataset::features`]. Every call to
/// [`Dataset::labels`] bumps a counter so tests can assert that no scoring
/// path reads the ground truth.
#[derive(Debug)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    pub customer_ids: Option<Vec<i64>>,
    pub feature_names: Vec<String>,
    label_reads: AtomicUsize,
}

impl Clone for Dataset {
    fn clone(&self) -> Self {
        Self {
            features: self.features.clone(),
            labels: self.labels.clone(),
            customer_ids: self.customer_ids.clone(),
            feature_names: self.feature_names.clone(),
            label_reads: AtomicUsize::new(0),
        }
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.features == other.features
            && self.labels == other.labels
            && self.customer_ids == other.customer_ids
            && self.feature_names == other.feature_names
    }
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                actual: labels.len(),
            });
        }
        if feature_names.len() != features.cols() {
            return Err(Error::DimensionMismatch {
                expected: features.cols(),
                actual: feature_names.len(),
            });
        }
        if let Some(&bad) = features.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        Ok(Self {
            features,
            labels,
            customer_ids: None,
            feature_names,
            label_reads: AtomicUsize::new(0),
        })
    }

    /// Dataset with all-zero labels and generated feature names.
    pub fn unlabeled(features: Matrix) -> Result<Self> {
        let names = (0..features.cols()).map(|j| format!("x{j}")).collect();
        let labels = vec![0; features.rows()];
        Self::new(features, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// Ground-truth labels. For evaluation only.
    pub fn labels(&self) -> &[u8] {
        self.label_reads.fetch_add(1, Ordering::Relaxed);
        &self.labels
    }

    pub fn label_read_count(&self) -> usize {
        self.label_reads.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dims(&self) -> usize {
        self.features.cols()
    }

    pub fn positive_rate(&self) -> f64 {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        pos as f64 / self.labels.len() as f64
    }

    /// Seeded uniform draw of `n` rows without replacement, original order kept.
    pub fn subsample_rows(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.len() {
            return self.clone();
        }
        let mut rng = SeededRng::new(seed);
        let mut idx = rng.sample_indices(self.len(), n);
        idx.sort_unstable();
        Dataset {
            features: self.features.select_rows(&idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            customer_ids: self
                .customer_ids
                .as_ref()
                .map(|c| idx.iter().map(|&i| c[i]).collect()),
            feature_names: self.feature_names.clone(),
            label_reads: AtomicUsize::new(0),
        }
    }
}

const SYNTHETIC_CLUSTERS: usize = 3;
const MIN_CENTER_SEPARATION: f64 = 10.0;
const CENTER_BOX: f64 = 20.0;

fn cluster_centers(dims: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    for _ in 0..10_000 {
        let centers: Vec<Vec<f64>> = (0..SYNTHETIC_CLUSTERS)
            .map(|_| {
                (0..dims)
                    .map(|_| CENTER_BOX * (2.0 * rng.uniform() - 1.0))
                    .collect()
            })
            .collect();
        let separated = (0..SYNTHETIC_CLUSTERS).all(|a| {
            (a + 1..SYNTHETIC_CLUSTERS).all(|b| {
                crate::matrix::distance(&centers[a], &centers[b]) >= MIN_CENTER_SEPARATION
            })
        });
        if separated {
            return centers;
        }
    }
    // Unreachable in practice; a line of centers 2x the separation apart.
    (0..SYNTHETIC_CLUSTERS)
        .map(|k| {
            let mut c = vec![0.0; dims];
            c[0] = 2.0 * MIN_CENTER_SEPARATION * k as f64;
            c
        })
        .collect()
}

/// Three unit-variance Gaussian clusters (centers at least 10 apart) plus
/// anomalies drawn uniformly from a box twice the extent of the normal
/// points. Rows are shuffled; labels mark anomalies with 1.
pub fn generate_synthetic(
    n_normal: usize,
    n_anomaly: usize,
    dims: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_normal < 2 {
        return Err(Error::invalid("synthetic data needs at least 2 normal points"));
    }
    if dims < 1 {
        return Err(Error::invalid("synthetic data needs at least 1 dimension"));
    }
    let mut rng = SeededRng::new(seed);
    let centers = cluster_centers(dims, &mut rng);

    let n = n_normal + n_anomaly;
    let mut points: Vec<(Vec<f64>, u8)> = Vec::with_capacity(n);
    for i in 0..n_normal {
        let c = &centers[i % SYNTHETIC_CLUSTERS];
        let p = c.iter().map(|&m| m + rng.standard_normal()).collect();
        points.push((p, 0));
    }

    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for (p, _) in &points {
        for j in 0..dims {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    for _ in 0..n_anomaly {
        let p = (0..dims)
            .map(|j| {
                let mid = 0.5 * (lo[j] + hi[j]);
                let half = hi[j] - lo[j];
                mid - half + 2.0 * half * rng.uniform()
            })
            .collect();
        points.push((p, 1));
    }
    rng.shuffle(&mut points);

    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    for (p, l) in points {
        data.extend(p);
        labels.push(l);
    }
    let names = (0..dims).map(|j| format!("x{j}")).collect();
    Dataset::new(Matrix::new(n, dims, data)?, labels, names)
}
