//! CART regression trees and bagged regression forests.
//!
//! Trees are grown greedily. At every node the split minimising the summed
//! squared error of the two children is chosen among all midpoints between
//! consecutive distinct feature values. A sample is routed left iff its
//! feature value is strictly below the threshold.
//!
//! Forests bag trees over bootstrap resamples. Tree `t` draws its sample from
//! its own ChaCha stream `(seed, t)`, so a forest is identical whether its
//! trees are fitted on one thread or many.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("no training rows")]
    EmptyInput,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("targets has {targets} entries but there are {rows} rows")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("non-finite value in training data")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 2,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn with_depth(max_depth: usize) -> Self {
        Self {
            max_depth,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), ForestError> {
        if self.max_depth == 0 {
            return Err(ForestError::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.min_samples_split == 0 || self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidParams(
                "min_samples_split and min_samples_leaf must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_trees: usize,
    /// Fit each tree on a bootstrap resample; when off every tree sees all rows.
    pub bootstrap: bool,
    /// Features considered per split. `None` considers all of them.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            tree: TreeParams::default(),
            n_trees: 100,
            bootstrap: true,
            max_features: None,
        }
    }
}

impl ForestParams {
    pub fn new(max_depth: usize, n_trees: usize) -> Self {
        Self {
            tree: TreeParams::with_depth(max_depth),
            n_trees,
            ..Self::default()
        }
    }

    /// One tree over all rows: the forest degenerates to a plain CART tree.
    pub fn single_tree(tree: TreeParams) -> Self {
        Self {
            tree,
            n_trees: 1,
            bootstrap: false,
            max_features: None,
        }
    }

    fn validate(&self) -> Result<(), ForestError> {
        self.tree.validate()?;
        if self.n_trees == 0 {
            return Err(ForestError::InvalidParams("n_trees must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(ForestError::InvalidParams(
                "max_features must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    split: Option<Split>,
    n: usize,
    mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<Box<TreeNode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right: Option<Box<TreeNode>>,
}

impl TreeNode {
    pub fn leaf(n: usize, mean: f64) -> Self {
        Self {
            split: None,
            n,
            mean,
            left: None,
            right: None,
        }
    }

    /// Internal node over two children; count and mean are pooled from them.
    pub fn internal(split: Split, left: TreeNode, right: TreeNode) -> Self {
        let n = left.n + right.n;
        let mean = if n == 0 {
            0.0
        } else {
            (left.mean * left.n as f64 + right.mean * right.n as f64) / n as f64
        };
        Self {
            split: Some(split),
            n,
            mean,
            left: Some(Box::new(left)),
            right: Some(Box::new(right)),
        }
    }

    pub fn split(&self) -> Option<Split> {
        self.split
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn children(&self) -> Option<(&TreeNode, &TreeNode)> {
        Some((self.left.as_deref()?, self.right.as_deref()?))
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn depth(&self) -> usize {
        match self.children() {
            Some((l, r)) => 1 + l.depth().max(r.depth()),
            None => 0,
        }
    }

    /// Leaf mean reached by `x`. Panics if `x` is shorter than a split feature.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        while let (Some(split), Some(left), Some(right)) = (node.split, &node.left, &node.right) {
            node = if x[split.feature] < split.threshold {
                left
            } else {
                right
            };
        }
        node.mean
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            if let Some((l, r)) = node.children() {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    fn max_feature(&self) -> Option<usize> {
        self.walk()
            .into_iter()
            .filter_map(|n| n.split.map(|s| s.feature))
            .max()
    }
}

/// Column-major copy of the training matrix.
struct Columns {
    cols: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Columns {
    fn new(x: &[Vec<f64>], y: &[f64]) -> Result<Self, ForestError> {
        if x.is_empty() {
            return Err(ForestError::EmptyInput);
        }
        if x.len() != y.len() {
            return Err(ForestError::LengthMismatch {
                rows: x.len(),
                targets: y.len(),
            });
        }
        let d = x[0].len();
        let mut cols = vec![Vec::with_capacity(x.len()); d];
        for row in x {
            if row.len() != d {
                return Err(ForestError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (c, &v) in cols.iter_mut().zip(row) {
                if !v.is_finite() {
                    return Err(ForestError::NonFinite);
                }
                c.push(v);
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ForestError::NonFinite);
        }
        Ok(Self {
            cols,
            y: y.to_vec(),
        })
    }

    fn n_features(&self) -> usize {
        self.cols.len()
    }
}

/// Midpoint between two consecutive distinct values that still routes `lo`
/// left and `hi` right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Relative slack under which two candidate SSEs are treated as tied.
pub(crate) const TIE_TOLERANCE: f64 = 1e-10;

struct Grower<'a> {
    data: &'a Columns,
    params: TreeParams,
    max_features: Option<usize>,
}

impl Grower<'_> {
    fn grow(&self, idx: Vec<usize>, depth: usize, rng: &mut Option<ChaCha8Rng>) -> TreeNode {
        let y = &self.data.y;
        let n = idx.len();
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
        let constant = idx.iter().all(|&i| y[i] == y[idx[0]]);
        if depth >= self.params.max_depth || n < self.params.min_samples_split || constant {
            return TreeNode::leaf(n, mean);
        }
        let features = self.candidate_features(rng);
        let Some(split) = self.best_split(&idx, mean, &features) else {
            return TreeNode::leaf(n, mean);
        };
        let col = &self.data.cols[split.feature];
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| col[i] < split.threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        TreeNode {
            split: Some(split),
            n,
            mean,
            left: Some(Box::new(left)),
            right: Some(Box::new(right)),
        }
    }

    fn candidate_features(&self, rng: &mut Option<ChaCha8Rng>) -> Vec<usize> {
        let d = self.data.n_features();
        match (self.max_features, rng.as_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = index::sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&self, idx: &[usize], mean: f64, features: &[usize]) -> Option<Split> {
        let y = &self.data.y;
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let node_sse: f64 = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();

        // (feature, threshold, children SSE) in feature-then-threshold order.
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        let mut order = idx.to_vec();
        for &f in features {
            let col = &self.data.cols[f];
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            // Centered sums keep the SSE arithmetic well conditioned.
            let total: f64 = order.iter().map(|&i| y[i] - mean).sum();
            let total_sq: f64 = order.iter().map(|&i| (y[i] - mean).powi(2)).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 1..n {
                let v = y[order[k - 1]] - mean;
                s += v;
                sq += v * v;
                let (lo, hi) = (col[order[k - 1]], col[order[k]]);
                if lo == hi || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let nl = k as f64;
                let nr = (n - k) as f64;
                let sse_l = sq - s * s / nl;
                let sse_r = (total_sq - sq) - (total - s).powi(2) / nr;
                candidates.push((f, midpoint(lo, hi), sse_l + sse_r));
            }
        }
        let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let slack = TIE_TOLERANCE * node_sse.max(f64::MIN_POSITIVE);
        candidates
            .into_iter()
            .find(|c| c.2 <= best + slack)
            .map(|(feature, threshold, _)| Split { feature, threshold })
    }
}

/// Fits one CART regression tree on all rows.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<TreeNode, ForestError> {
    params.validate()?;
    let data = Columns::new(x, y)?;
    let grower = Grower {
        data: &data,
        params: *params,
        max_features: None,
    };
    Ok(grower.grow((0..data.y.len()).collect(), 0, &mut None))
}

/// The RNG driving tree `tree_index` of a forest seeded with `seed`.
fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionForest {
    trees: Vec<TreeNode>,
    feature_count: usize,
    seed: u64,
}

/// Fits a bagged forest. Trees are fitted in parallel on the current rayon pool.
pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<RegressionForest, ForestError> {
    params.validate()?;
    let data = Columns::new(x, y)?;
    let n = data.y.len();
    let grower = Grower {
        data: &data,
        params: params.tree,
        max_features: params.max_features,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(idx, 0, &mut Some(rng))
        })
        .collect();
    Ok(RegressionForest {
        trees,
        feature_count: data.n_features(),
        seed,
    })
}

impl RegressionForest {
    /// Wraps hand-built trees, e.g. for diagnostics.
    pub fn from_trees(trees: Vec<TreeNode>, feature_count: usize) -> Result<Self, ForestError> {
        if trees.is_empty() {
            return Err(ForestError::EmptyInput);
        }
        if let Some(f) = trees.iter().filter_map(TreeNode::max_feature).max() {
            if f >= feature_count {
                return Err(ForestError::DimensionMismatch {
                    expected: feature_count,
                    got: f + 1,
                });
            }
        }
        Ok(Self {
            trees,
            feature_count,
            seed: 0,
        })
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean over trees of the leaf mean reached by `x`.
    pub fn predict(&self, x: &[f64]) -> Result<f64, ForestError> {
        if x.len() != self.feature_count {
            return Err(ForestError::DimensionMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x);
        }
        sum / self.trees.len() as f64
    }
}

// ---------------------------------------------------------------------------
// Tree report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSplit {
    pub feature: String,
    pub feature_index: usize,
    pub threshold: f64,
}

/// One node of an exported tree, numbered in pre-order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportNode {
    pub id: usize,
    pub split: Option<ReportSplit>,
    pub n: usize,
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<Box<ReportNode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<Box<ReportNode>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeReport {
    pub root: ReportNode,
}

pub fn export_tree(tree: &TreeNode, feature_names: &[String]) -> TreeReport {
    fn build(node: &TreeNode, names: &[String], next_id: &mut usize) -> ReportNode {
        let id = *next_id;
        *next_id += 1;
        let split = node.split.map(|s| ReportSplit {
            feature: names
                .get(s.feature)
                .cloned()
                .unwrap_or_else(|| format!("x{}", s.feature)),
            feature_index: s.feature,
            threshold: s.threshold,
        });
        let (left, right) = match node.children() {
            Some((l, r)) => {
                let l = build(l, names, next_id);
                let r = build(r, names, next_id);
                (Some(Box::new(l)), Some(Box::new(r)))
            }
            None => (None, None),
        };
        ReportNode {
            id,
            split,
            n: node.n,
            mean: node.mean,
            left,
            right,
        }
    }
    let mut next_id = 0;
    TreeReport {
        root: build(tree, feature_names, &mut next_id),
    }
}

impl TreeReport {
    /// Depth-first listing, one line per node: criterion (internal nodes
    /// only), sample count and mean outcome.
    pub fn to_text(&self) -> String {
        fn render(node: &ReportNode, depth: usize, out: &mut String) {
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("n{}", node.id));
            if let Some(s) = &node.split {
                out.push_str(&format!(" [{} < {:?}]", s.feature, s.threshold));
            }
            out.push_str(&format!(" n={} mean={:.1}\n", node.n, node.mean));
            for child in [&node.left, &node.right].into_iter().flatten() {
                render(child, depth + 1, out);
            }
        }
        let mut out = String::new();
        render(&self.root, 0, &mut out);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.root).expect("report serializes")
    }

    pub fn nodes(&self) -> Vec<&ReportNode> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            out.push(node);
            if let (Some(l), Some(r)) = (&node.left, &node.right) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }
}
