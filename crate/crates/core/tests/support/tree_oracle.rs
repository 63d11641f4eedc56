//! Brute-force regression tree used to check the production splitter.
//!
//! Every candidate split is scored by partitioning the rows and computing both
//! child SSEs from scratch with a two-pass mean; no running sums are shared
//! with the library.

use catebench_core::forest::{TreeNode, TreeParams};

#[derive(Debug, Clone)]
pub struct OracleNode {
    pub split: Option<(usize, f64)>,
    pub n: usize,
    pub mean: f64,
    pub children: Option<Box<(OracleNode, OracleNode)>>,
}

fn mean_of(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

pub fn sse_of(y: &[f64], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let m = mean_of(y, idx);
    idx.iter().map(|&i| (y[i] - m).powi(2)).sum()
}

/// Every admissible `(feature, threshold, children SSE)` at a node, ordered
/// by feature and then threshold.
#[allow(clippy::needless_range_loop)]
pub fn enumerate_splits(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    min_leaf: usize,
) -> Vec<(usize, f64, f64)> {
    let d = x[0].len();
    let mut out = Vec::new();
    for f in 0..d {
        let mut values: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let (left, right): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x[i][f] < threshold);
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            out.push((f, threshold, sse_of(y, &left) + sse_of(y, &right)));
        }
    }
    out
}

pub fn oracle_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> OracleNode {
    let idx: Vec<usize> = (0..y.len()).collect();
    grow(x, y, params, &idx, 0)
}

fn grow(x: &[Vec<f64>], y: &[f64], params: &TreeParams, idx: &[usize], depth: usize) -> OracleNode {
    let n = idx.len();
    let mean = mean_of(y, idx);
    let leaf = OracleNode {
        split: None,
        n,
        mean,
        children: None,
    };
    let constant = idx.iter().all(|&i| y[i] == y[idx[0]]);
    if depth >= params.max_depth || n < params.min_samples_split || constant {
        return leaf;
    }
    let candidates = enumerate_splits(x, y, idx, params.min_samples_leaf);
    let Some(best) = candidates.iter().map(|c| c.2).min_by(f64::total_cmp) else {
        return leaf;
    };
    let slack = 1e-10 * sse_of(y, idx).max(f64::MIN_POSITIVE);
    let &(f, t, _) = candidates.iter().find(|c| c.2 <= best + slack).unwrap();
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] < t);
    OracleNode {
        split: Some((f, t)),
        n,
        mean,
        children: Some(Box::new((
            grow(x, y, params, &l, depth + 1),
            grow(x, y, params, &r, depth + 1),
        ))),
    }
}

/// Describes the first disagreement between a fitted tree and the oracle.
pub fn compare(tree: &TreeNode, oracle: &OracleNode, path: &str) -> Result<(), String> {
    if tree.n() != oracle.n {
        return Err(format!("{path}: n {} vs oracle {}", tree.n(), oracle.n));
    }
    if (tree.mean() - oracle.mean).abs() > 1e-9 * (1.0 + oracle.mean.abs()) {
        return Err(format!(
            "{path}: mean {} vs oracle {}",
            tree.mean(),
            oracle.mean
        ));
    }
    let got = tree.split().map(|s| (s.feature, s.threshold));
    if got != oracle.split {
        return Err(format!(
            "{path}: split {got:?} vs oracle {:?}",
            oracle.split
        ));
    }
    match (tree.children(), &oracle.children) {
        (Some((l, r)), Some(kids)) => {
            compare(l, &kids.0, &format!("{path}L"))?;
            compare(r, &kids.1, &format!("{path}R"))
        }
        (None, None) => Ok(()),
        _ => Err(format!("{path}: shape differs")),
    }
}
