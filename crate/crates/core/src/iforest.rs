//! Isolation Forest: randomized axis-aligned partition trees whose mean
//! isolation depth yields the anomaly score `2^(-h/c(psi))`.
//!
//! Per-tree path lengths are exposed through [`Forest::path_lengths`] so
//! the fingerprint layer can keep the information the scalar score drops.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use crate::score::ScoreVector;
use crate::text_format::LineReader;

pub const EULER_GAMMA: f64 = 0.577_215_664_9;
/// Largest `n` for which `c(n)` sums the harmonic series exactly.
pub const EXACT_HARMONIC_LIMIT: usize = 1000;

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_SUBSAMPLE: usize = 256;

fn harmonic_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut h = Vec::with_capacity(EXACT_HARMONIC_LIMIT);
        let mut acc = 0.0;
        h.push(0.0);
        for i in 1..EXACT_HARMONIC_LIMIT {
            acc += 1.0 / i as f64;
            h.push(acc);
        }
        h
    })
}

/// Average path length of an unsuccessful binary-search-tree lookup over
/// `n` keys: `2 H(n-1) - 2 (n-1) / n`, with `c(1) = 0`.
pub fn c_factor(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("c_factor is undefined for n = 0"));
    }
    Ok(average_path_length(n))
}

#[inline]
pub(crate) fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = n - 1;
    let harmonic = if n <= EXACT_HARMONIC_LIMIT {
        harmonic_table()[m]
    } else {
        (m as f64).ln() + EULER_GAMMA
    };
    2.0 * harmonic - 2.0 * m as f64 / n as f64
}

/// `2^(-mean_path / normalizer)`.
#[inline]
pub fn score_from_mean_path(mean_path: f64, normalizer: f64) -> f64 {
    (-mean_path / normalizer).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Points with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { size: usize, depth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl IsolationTree {
    /// Grows a tree on the rows `sample` of `data`.
    pub fn grow(data: &Matrix, sample: &mut [usize], height_limit: usize, rng: &mut SeededRng) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            n_features: data.cols(),
        };
        tree.grow_node(data, sample, 0, height_limit, rng);
        tree
    }

    /// Builds a tree from a node array. Node 0 is the root.
    pub fn from_nodes(nodes: Vec<Node>, n_features: usize) -> Result<Self> {
        let tree = Self { nodes, n_features };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::ModelFormat("tree has no nodes".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::ModelFormat(format!("node {i} reached twice")));
            }
            if let Node::Split {
                feature,
                left,
                right,
                threshold,
            } = self.nodes[i]
            {
                if feature >= self.n_features || !threshold.is_finite() {
                    return Err(Error::ModelFormat(format!("bad split at node {i}")));
                }
                for c in [left, right] {
                    if c >= self.nodes.len() || c <= i {
                        return Err(Error::ModelFormat(format!("bad child {c} at node {i}")));
                    }
                    stack.push(c);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::ModelFormat("unreachable nodes".into()));
        }
        Ok(())
    }

    fn grow_node(
        &mut self,
        data: &Matrix,
        sample: &mut [usize],
        depth: usize,
        limit: usize,
        rng: &mut SeededRng,
    ) -> usize {
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            size: sample.len(),
            depth,
        };
        if sample.len() <= 1 || depth >= limit {
            self.nodes.push(leaf);
            return id;
        }

        // Only features that vary over this node's points can split it.
        let mut ranges: Vec<(usize, f64, f64)> = Vec::new();
        for j in 0..data.cols() {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in sample.iter() {
                let v = data.get(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi > lo {
                ranges.push((j, lo, hi));
            }
        }
        if ranges.is_empty() {
            self.nodes.push(leaf);
            return id;
        }

        let (feature, lo, hi) = ranges[rng.below(ranges.len())];
        let mut threshold = lo + rng.open_uniform() * (hi - lo);
        if threshold <= lo {
            // lo and hi are adjacent floats
            threshold = hi;
        }

        let mut split = 0;
        for k in 0..sample.len() {
            if data.get(sample[k], feature) < threshold {
                sample.swap(k, split);
                split += 1;
            }
        }

        self.nodes.push(leaf); // placeholder, patched below
        let (left_rows, right_rows) = sample.split_at_mut(split);
        let left = self.grow_node(data, left_rows, depth + 1, limit, rng);
        let right = self.grow_node(data, right_rows, depth + 1, limit, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { size, depth } => Some((size, depth)),
            Node::Split { .. } => None,
        })
    }

    pub fn max_depth(&self) -> usize {
        self.leaves().map(|(_, d)| d).max().unwrap_or(0)
    }

    /// Depth of the leaf reached by `point` plus `c(m)` for its training size `m`.
    pub fn path_length(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: point.len(),
            });
        }
        Ok(self.path_length_unchecked(point))
    }

    #[inline]
    pub(crate) fn path_length_unchecked(&self, point: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if point[feature] < threshold { left } else { right },
                Node::Leaf { size, depth } => return depth as f64 + average_path_length(size),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<IsolationTree>,
    subsample: usize,
    normalizer: f64,
    seed: u64,
    n_features: usize,
}

/// `ceil(log2(psi))`.
pub fn height_limit(subsample: usize) -> usize {
    let mut h = 0;
    while (1usize << h) < subsample {
        h += 1;
    }
    h
}

impl Forest {
    /// Trains `n_trees` trees, each on its own draw of `subsample` rows
    /// without replacement. Tree `t` uses the random sub-stream `(seed, t)`,
    /// so the result does not depend on how training is scheduled.
    pub fn fit(data: &Matrix, params: &ForestParams) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset(""));
        }
        if params.n_trees < 1 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if params.subsample < 2 {
            return Err(Error::invalid("subsample size must be at least 2"));
        }
        let n = data.rows();
        let subsample = if params.subsample > n {
            log::warn!(
                "subsample size {} exceeds {} rows; using {}",
                params.subsample,
                n,
                n
            );
            n
        } else {
            params.subsample
        };
        let limit = height_limit(subsample);
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = SeededRng::substream(params.seed, t as u64);
                let mut sample = rng.sample_indices(n, subsample);
                IsolationTree::grow(data, &mut sample, limit, &mut rng)
            })
            .collect();
        Ok(Self {
            trees,
            subsample,
            normalizer: average_path_length(subsample),
            seed: params.seed,
            n_features: data.cols(),
        })
    }

    pub fn from_trees(trees: Vec<IsolationTree>, subsample: usize, seed: u64) -> Result<Self> {
        let n_features = trees
            .first()
            .map(IsolationTree::n_features)
            .ok_or_else(|| Error::invalid("forest needs at least one tree"))?;
        if subsample < 2 {
            return Err(Error::invalid("subsample size must be at least 2"));
        }
        if trees.iter().any(|t| t.n_features() != n_features) {
            return Err(Error::invalid("trees disagree on feature count"));
        }
        Ok(Self {
            trees,
            subsample,
            normalizer: average_path_length(subsample),
            seed,
            n_features,
        })
    }

    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }

    /// `c(psi)`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn check_arity(&self, data: &Matrix) -> Result<()> {
        if data.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: data.cols(),
            });
        }
        Ok(())
    }

    /// Path length of every row in every tree, row-major `N x T`.
    pub fn path_lengths(&self, data: &Matrix) -> Result<Matrix> {
        self.check_arity(data)?;
        let t = self.trees.len();
        let mut out = Matrix::zeros(data.rows(), t);
        let rows: Vec<Vec<f64>> = (0..data.rows())
            .into_par_iter()
            .map(|i| {
                let x = data.row(i);
                self.trees.iter().map(|tree| tree.path_length_unchecked(x)).collect()
            })
            .collect();
        for (i, r) in rows.into_iter().enumerate() {
            out.row_mut(i).copy_from_slice(&r);
        }
        Ok(out)
    }

    /// Mean path length per row. Summation runs in tree order, matching a
    /// row mean of [`Forest::path_lengths`] exactly.
    pub fn mean_path_lengths(&self, data: &Matrix) -> Result<Vec<f64>> {
        self.check_arity(data)?;
        let t = self.trees.len() as f64;
        Ok((0..data.rows())
            .into_par_iter()
            .map(|i| {
                let x = data.row(i);
                self.trees
                    .iter()
                    .map(|tree| tree.path_length_unchecked(x))
                    .sum::<f64>()
                    / t
            })
            .collect())
    }

    pub fn score_matrix(&self, data: &Matrix) -> Result<ScoreVector> {
        let scores = self
            .mean_path_lengths(data)?
            .into_iter()
            .map(|h| score_from_mean_path(h, self.normalizer))
            .collect();
        Ok(ScoreVector::new("iforest", scores)
            .with_param("trees", self.n_trees())
            .with_param("subsample", self.subsample)
            .with_seed(self.seed))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "silif-forest 1")?;
        writeln!(w, "trees {}", self.trees.len())?;
        writeln!(w, "subsample {}", self.subsample)?;
        writeln!(w, "seed {}", self.seed)?;
        writeln!(w, "features {}", self.n_features)?;
        for tree in &self.trees {
            writeln!(w, "tree {}", tree.nodes.len())?;
            for node in &tree.nodes {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(w, "S {feature} {threshold} {left} {right}")?,
                    Node::Leaf { size, depth } => writeln!(w, "L {size} {depth}")?,
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        Self::read_records(&mut LineReader::new(r))
    }

    pub(crate) fn read_records<R: BufRead>(r: &mut LineReader<R>) -> Result<Self> {
        let version: u32 = r.expect_value("silif-forest")?;
        if version != 1 {
            return Err(r.error(format!("unsupported forest version {version}")));
        }
        let n_trees: usize = r.expect_value("trees")?;
        let subsample: usize = r.expect_value("subsample")?;
        let seed: u64 = r.expect_value("seed")?;
        let n_features: usize = r.expect_value("features")?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes: usize = r.expect_value("tree")?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let rec = r.next_record()?;
                let node = match rec.as_slice() {
                    [tag, f, t, l, rt] if tag == "S" => Node::Split {
                        feature: r.parse(f)?,
                        threshold: r.parse(t)?,
                        left: r.parse(l)?,
                        right: r.parse(rt)?,
                    },
                    [tag, s, d] if tag == "L" => Node::Leaf {
                        size: r.parse(s)?,
                        depth: r.parse(d)?,
                    },
                    _ => return Err(r.error(format!("bad node record `{}`", rec.join(" ")))),
                };
                nodes.push(node);
            }
            trees.push(IsolationTree::from_nodes(nodes, n_features)?);
        }
        Self::from_trees(trees, subsample, seed)
    }
}

pub fn fit(data: &Dataset, n_trees: usize, subsample: usize, seed: u64) -> Result<Forest> {
    Forest::fit(
        data.features(),
        &ForestParams {
            n_trees,
            subsample,
            seed,
        },
    )
}

pub fn score(forest: &Forest, data: &Dataset) -> Result<ScoreVector> {
    forest.score_matrix(data.features())
}
