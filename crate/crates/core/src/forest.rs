//! CART regression trees and a bagged random forest.
//!
//! Splits minimize the weighted sum of child squared errors. Candidate
//! thresholds are midpoints between consecutive distinct feature values, a
//! row goes left when `x[feature] <= threshold`, and a candidate only
//! replaces the incumbent when it improves the score by more than
//! [`SPLIT_TOLERANCE`] (relative to the parent SSE). Equal candidates are
//! therefore resolved by scan order: lower feature index first, then lower
//! threshold.
//!
//! Bootstrap resamples are represented as integer row weights, and each
//! node keeps one row list per feature, presorted by that feature's value.
//! Splitting a node stably partitions those lists, so no sorting happens
//! below the root.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::Matrix;
use crate::rng::{self, Rng};
use crate::stats;

/// Relative improvement a candidate split needs over the current best.
pub const SPLIT_TOLERANCE: f64 = 1e-10;

/// Number of candidate features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Sqrt,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(k) => k,
            MaxFeatures::Fraction(f) => (f * n_features as f64).floor() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter(
                "min_samples_split must be at least 2".into(),
            ));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "max_features fraction {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
    /// Runtime only; does not affect results.
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            bootstrap: true,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl ForestParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            max_features: self.max_features,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        self.tree_params().validate()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        prediction: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        n_samples: usize,
        /// Parent SSE minus the summed SSE of both children.
        sse_decrease: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Leaf { n_samples, .. } | TreeNode::Split { n_samples, .. } => *n_samples,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Highest feature index referenced by a split, if any.
    fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    fn accumulate_importance(&self, out: &mut [f64]) {
        if let TreeNode::Split {
            feature,
            sse_decrease,
            left,
            right,
            ..
        } = self
        {
            out[*feature] += sse_decrease;
            left.accumulate_importance(out);
            right.accumulate_importance(out);
        }
    }
}

/// A fitted tree together with the feature count it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
    pub n_features: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict_tree(&self.root, x, self.n_features)
    }
}

/// Routes `x` to a leaf. `n_features` is the training dimensionality.
pub fn predict_tree(tree: &TreeNode, x: &[f64], n_features: usize) -> Result<f64> {
    if x.len() != n_features {
        return Err(Error::LengthMismatch {
            expected: n_features,
            actual: x.len(),
        });
    }
    debug_assert!(tree.max_feature().is_none_or(|f| f < n_features));
    Ok(tree.predict_unchecked(x))
}

fn check_xy(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::Degenerate("empty training matrix".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.n_rows(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// Column-major copy of the training matrix plus, per feature, the row
/// indices sorted by that feature's value (ties by row index).
struct Presorted {
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<usize>>,
}

impl Presorted {
    fn new(x: &Matrix) -> Self {
        let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|f| x.column(f)).collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<usize> = (0..c.len()).collect();
                idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { cols, order }
    }
}

/// Fits a single tree on every row with unit weight.
pub fn fit_tree(x: &Matrix, y: &[f64], params: &TreeParams, rng: &mut Rng) -> Result<TreeNode> {
    check_xy(x, y)?;
    params.validate()?;
    let weights = vec![1u32; y.len()];
    Ok(fit_weighted(&Presorted::new(x), y, &weights, params, rng))
}

fn fit_weighted(
    pre: &Presorted,
    y: &[f64],
    weights: &[u32],
    params: &TreeParams,
    rng: &mut Rng,
) -> TreeNode {
    let sorted: Vec<Vec<usize>> = pre
        .order
        .iter()
        .map(|order| order.iter().copied().filter(|&r| weights[r] > 0).collect())
        .collect();
    let m = sorted[0].len();
    let builder = Builder {
        cols: &pre.cols,
        y,
        w: weights,
        params,
        n_candidates: params.max_features.resolve(pre.cols.len()),
    };
    let mut work = Workspace {
        sorted,
        scratch: Vec::with_capacity(m),
        goes_left: vec![false; y.len()],
    };
    builder.build(&mut work, 0, m, 0, rng)
}

struct Builder<'a> {
    cols: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [u32],
    params: &'a TreeParams,
    n_candidates: usize,
}

/// Per-feature sorted row lists; a node owns the range `lo..hi` of every
/// list, and splitting partitions that range in place.
struct Workspace {
    sorted: Vec<Vec<usize>>,
    scratch: Vec<usize>,
    goes_left: Vec<bool>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn build(&self, work: &mut Workspace, lo: usize, hi: usize, depth: usize, rng: &mut Rng) -> TreeNode {
        let rows = &work.sorted[0][lo..hi];
        let mut wsum = 0.0;
        let mut ysum = 0.0;
        for &r in rows {
            let w = self.w[r] as f64;
            wsum += w;
            ysum += w * self.y[r];
        }
        let n_samples = rows.iter().map(|&r| self.w[r] as usize).sum::<usize>();
        let mean = ysum / wsum;
        let first = self.y[rows[0]];
        let pure = rows.iter().all(|&r| self.y[r] == first);
        let leaf = TreeNode::Leaf {
            prediction: if pure { first } else { mean },
            n_samples,
        };
        if pure
            || n_samples < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|d| depth >= d)
        {
            return leaf;
        }

        let sse: f64 = rows
            .iter()
            .map(|&r| self.w[r] as f64 * (self.y[r] - mean).powi(2))
            .sum();

        let Some(best) = self.best_split(work, lo, hi, mean, wsum, sse, rng) else {
            return leaf;
        };

        let mid = self.partition(work, lo, hi, best.feature, best.threshold);
        let left = self.build(work, lo, mid, depth + 1, rng);
        let right = self.build(work, mid, hi, depth + 1, rng);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            n_samples,
            sse_decrease: (sse - best.score).max(0.0),
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn candidate_features(&self, rng: &mut Rng) -> Vec<usize> {
        let n = self.cols.len();
        if self.n_candidates >= n {
            return (0..n).collect();
        }
        let mut f = sample(rng, n, self.n_candidates).into_vec();
        f.sort_unstable();
        f
    }

    #[allow(clippy::too_many_arguments)]
    fn best_split(
        &self,
        work: &Workspace,
        lo: usize,
        hi: usize,
        mean: f64,
        wsum: f64,
        sse: f64,
        rng: &mut Rng,
    ) -> Option<BestSplit> {
        let tol = SPLIT_TOLERANCE * sse;
        let mut best: Option<BestSplit> = None;
        // Centered sums: total of w*(y-mean) is ~0 and the total of squares is the SSE.
        let total_s: f64 = work.sorted[0][lo..hi]
            .iter()
            .map(|&r| self.w[r] as f64 * (self.y[r] - mean))
            .sum();
        for f in self.candidate_features(rng) {
            let order = &work.sorted[f][lo..hi];
            let col = &self.cols[f];
            let (mut wl, mut sl, mut ql) = (0.0, 0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let r = order[pos];
                let w = self.w[r] as f64;
                let d = self.y[r] - mean;
                wl += w;
                sl += w * d;
                ql += w * d * d;
                let a = col[r];
                let b = col[order[pos + 1]];
                if !(b > a) {
                    continue;
                }
                let wr = wsum - wl;
                let sr = total_s - sl;
                let qr = sse - ql;
                let score = (ql - sl * sl / wl).max(0.0) + (qr - sr * sr / wr).max(0.0);
                let improves = match &best {
                    None => true,
                    Some(b) => score < b.score - tol,
                };
                if improves {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: midpoint(a, b),
                        score,
                    });
                }
            }
        }
        best
    }

    /// Stable partition of every feature's `lo..hi` range; returns the first
    /// index of the right child.
    fn partition(&self, work: &mut Workspace, lo: usize, hi: usize, feature: usize, threshold: f64) -> usize {
        let col = &self.cols[feature];
        let mut n_left = 0;
        for &r in &work.sorted[feature][lo..hi] {
            let left = col[r] <= threshold;
            work.goes_left[r] = left;
            n_left += usize::from(left);
        }
        let Workspace {
            sorted,
            scratch,
            goes_left,
        } = work;
        for list in sorted.iter_mut() {
            let seg = &mut list[lo..hi];
            scratch.clear();
            let mut write = 0;
            for read in 0..seg.len() {
                let r = seg[read];
                if goes_left[r] {
                    seg[write] = r;
                    write += 1;
                } else {
                    scratch.push(r);
                }
            }
            seg[write..].copy_from_slice(scratch);
        }
        lo + n_left
    }
}

/// Midpoint of two consecutive distinct values, kept strictly below `b`.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

/// Bag of CART trees; prediction is the mean over trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub trees: Vec<TreeNode>,
    pub tree_seeds: Vec<u64>,
    pub n_features: usize,
    pub criterion: String,
    pub params: ForestParams,
}

/// Normalized mean-decrease-in-impurity importances.
#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    pub values: Vec<f64>,
    /// Set when no tree contains a split; `values` is then all zeros.
    pub all_zero: bool,
}

impl RegressionForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::LengthMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict_unchecked(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.rows().map(|row| self.predict(row)).collect()
    }

    /// Per split, (parent SSE - children SSE) / root sample count is credited
    /// to the split feature; per-tree sums are averaged and normalized to 1.
    pub fn importance(&self) -> Importance {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.trees {
            let mut acc = vec![0.0; self.n_features];
            tree.accumulate_importance(&mut acc);
            let n = tree.n_samples().max(1) as f64;
            for (t, a) in total.iter_mut().zip(&acc) {
                *t += a / n;
            }
        }
        let sum: f64 = total.iter().sum();
        if sum <= 0.0 {
            return Importance {
                values: vec![0.0; self.n_features],
                all_zero: true,
            };
        }
        Importance {
            values: total.into_iter().map(|v| v / sum).collect(),
            all_zero: false,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Fits `params.n_trees` trees, each on its own bootstrap sample drawn from
/// a generator seeded by `(params.seed, tree index)`.
pub fn fit_forest(x: &Matrix, y: &[f64], params: &ForestParams) -> Result<RegressionForest> {
    check_xy(x, y)?;
    params.validate()?;
    let tree_params = params.tree_params();
    let presorted = Presorted::new(x);
    let n = x.n_rows();
    let tree_seeds: Vec<u64> = (0..params.n_trees)
        .map(|t| rng::derive_seed(params.seed, t as u64))
        .collect();
    let trees = params.execution.map_range(params.n_trees, |t| {
        let mut rng = rng::seeded(tree_seeds[t]);
        let mut weights = vec![0u32; n];
        if params.bootstrap {
            for _ in 0..n {
                weights[rng.gen_range(0..n)] += 1;
            }
        } else {
            weights.fill(1);
        }
        fit_weighted(&presorted, y, &weights, &tree_params, &mut rng)
    });
    Ok(RegressionForest {
        trees,
        tree_seeds,
        n_features: x.n_cols(),
        criterion: "squared_error".to_string(),
        params: params.clone(),
    })
}

/// Row indices of each fold: a seeded shuffle split into contiguous chunks,
/// the first `n % folds` chunks one row longer.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if folds > n {
        return Err(Error::InvalidParameter(format!(
            "{folds} folds requested for {n} rows"
        )));
    }
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for k in 0..folds {
        let len = base + usize::from(k < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

/// Validation MSE of each fold.
pub fn cv_fold_mses(
    x: &Matrix,
    y: &[f64],
    folds: usize,
    params: &ForestParams,
    cv_seed: u64,
) -> Result<Vec<f64>> {
    check_xy(x, y)?;
    let parts = fold_indices(x.n_rows(), folds, cv_seed)?;
    parts
        .iter()
        .enumerate()
        .map(|(k, test)| {
            let train: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            let xt = x.select_rows(&train);
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let forest = fit_forest(&xt, &yt, params)?;
            let xv = x.select_rows(test);
            let yv: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            stats::mse(&yv, &forest.predict_matrix(&xv)?)
        })
        .collect()
}

/// Mean of the per-fold validation MSEs.
pub fn cv_mse(x: &Matrix, y: &[f64], folds: usize, params: &ForestParams, cv_seed: u64) -> Result<f64> {
    let per_fold = cv_fold_mses(x, y, folds, params, cv_seed)?;
    Ok(stats::mean(&per_fold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf_value(node: &TreeNode) -> f64 {
        match node {
            TreeNode::Leaf { prediction, .. } => *prediction,
            _ => panic!("expected leaf"),
        }
    }

    #[test]
    fn perfect_separation() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let tree = fit_tree(&x, &[0.0, 10.0], &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        match &tree {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
                assert_eq!(leaf_value(left), 0.0);
                assert_eq!(leaf_value(right), 10.0);
            }
            _ => panic!("expected split"),
        }
        assert_eq!(predict_tree(&tree, &[0.5], 1).unwrap(), 0.0);
        assert_eq!(predict_tree(&tree, &[0.50001], 1).unwrap(), 10.0);
    }

    #[test]
    fn constant_target_is_leaf() {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 3.0], vec![2.0, 0.0]]).unwrap();
        let tree = fit_tree(&x, &[4.0; 3], &TreeParams::default(), &mut rng::seeded(0)).unwrap();
        assert!(tree.is_leaf());
        assert_eq!(predict_tree(&tree, &[9.0, 9.0], 2).unwrap(), 4.0);
        assert!(predict_tree(&tree, &[9.0], 2).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        let x = Matrix::zeros(0, 2);
        assert!(fit_tree(&x, &[], &TreeParams::default(), &mut rng::seeded(0)).is_err());
        assert!(fit_forest(&x, &[], &ForestParams::default()).is_err());
    }

    #[test]
    fn forest_mean_of_trees() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = [1.0, 2.0, 3.0, 10.0];
        let params = ForestParams {
            n_trees: 7,
            seed: 11,
            ..Default::default()
        };
        let f = fit_forest(&x, &y, &params).unwrap();
        for v in [-1.0, 0.5, 1.7, 2.5, 9.0] {
            let mean = f
                .trees
                .iter()
                .map(|t| predict_tree(t, &[v], 1).unwrap())
                .sum::<f64>()
                / 7.0;
            assert_eq!(f.predict(&[v]).unwrap(), mean);
        }
    }

    #[test]
    fn two_tree_average() {
        let f = RegressionForest {
            trees: vec![
                TreeNode::Leaf {
                    prediction: 2.0,
                    n_samples: 1,
                },
                TreeNode::Leaf {
                    prediction: 4.0,
                    n_samples: 1,
                },
            ],
            tree_seeds: vec![0, 1],
            n_features: 1,
            criterion: "squared_error".into(),
            params: ForestParams::default(),
        };
        assert_eq!(f.predict(&[0.0]).unwrap(), 3.0);
        assert!(f.importance().all_zero);
    }

    #[test]
    fn folds_partition_rows() {
        let folds = fold_indices(11, 3, 5).unwrap();
        assert_eq!(folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 3]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert!(fold_indices(3, 4, 0).is_err());
        assert!(fold_indices(3, 1, 0).is_err());
    }

    #[test]
    fn midpoint_stays_below_upper() {
        assert_eq!(midpoint(1.0, 2.0), 1.5);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::All.resolve(10), 10);
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 3);
        assert_eq!(MaxFeatures::Fraction(0.05).resolve(10), 1);
        assert_eq!(MaxFeatures::Count(20).resolve(10), 10);
    }
}
