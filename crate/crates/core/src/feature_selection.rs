//! Extremely randomized trees as an impurity-importance source, and recursive
//! feature elimination driven by those importances.
//!
//! Randomness is addressed rather than streamed: the candidate ordering and
//! split threshold for feature `f` at node `k` of tree `t` are hashes of
//! `(seed, t, k, f)`, where `f` is a stable feature id. Permuting columns while
//! carrying their ids therefore permutes the fitted trees identically.

use alloc::boxed::Box;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{check_binary, Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, hashed_unit, tag};

const CANDIDATE_KEY: u64 = 0x4b45_5900_0000_0001;
const THRESHOLD_DRAW: u64 = 0x5448_5200_0000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ExtraTreesParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: None,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        /// Column position in the fitted matrix.
        feature: usize,
        threshold: f64,
        n_samples: usize,
        n_positive: usize,
        impurity: f64,
        /// Parent Gini minus the size-weighted Gini of the children.
        impurity_decrease: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        n_samples: usize,
        n_positive: usize,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Split { n_samples, .. } | TreeNode::Leaf { n_samples, .. } => *n_samples,
        }
    }

    pub fn n_positive(&self) -> usize {
        match self {
            TreeNode::Split { n_positive, .. } | TreeNode::Leaf { n_positive, .. } => *n_positive,
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Visits every split node in preorder.
    pub fn for_each_split(&self, f: &mut impl FnMut(&TreeNode)) {
        if let TreeNode::Split { left, right, .. } = self {
            f(self);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }
}

/// Gini impurity of a binary node.
pub fn gini(n_samples: usize, n_positive: usize) -> f64 {
    if n_samples == 0 {
        return 0.0;
    }
    let p = n_positive as f64 / n_samples as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtraTree {
    pub root: TreeNode,
}

impl ExtraTree {
    /// Impurity decrease per feature, weighted by node share and normalised
    /// to sum to 1. `None` when the tree never reduced impurity.
    pub fn importances(&self, n_features: usize) -> Option<Vec<f64>> {
        let mut imp = alloc::vec![0.0; n_features];
        let total_n = self.root.n_samples() as f64;
        self.root.for_each_split(&mut |node| {
            if let TreeNode::Split {
                feature,
                n_samples,
                impurity_decrease,
                ..
            } = node
            {
                imp[*feature] += *n_samples as f64 / total_n * impurity_decrease;
            }
        });
        let sum: f64 = imp.iter().sum();
        if sum > 0.0 {
            imp.iter_mut().for_each(|v| *v /= sum);
            Some(imp)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtraTreesEstimator {
    pub params: ExtraTreesParams,
    pub n_features: usize,
    /// Stable id of each column, used to address its random draws.
    pub feature_ids: Vec<usize>,
    pub trees: Vec<ExtraTree>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FeatureRanking {
    pub importances: Vec<f64>,
    /// Column positions by descending importance, ties by ascending position.
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_importances(importances: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..importances.len()).collect();
        order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
        Self { importances, order }
    }
}

/// Validated inputs for growing trees one index at a time.
pub struct ExtraTreesBuilder<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    params: ExtraTreesParams,
    feature_ids: Vec<usize>,
    n_candidates: usize,
}

impl<'a> ExtraTreesBuilder<'a> {
    pub fn new(
        x: &'a Matrix,
        y: &'a [u8],
        params: &ExtraTreesParams,
        feature_ids: Option<&[usize]>,
    ) -> Result<Self> {
        if x.n_rows() == 0 || x.n_cols() == 0 {
            return Err(Error::Empty("feature matrix"));
        }
        if y.len() != x.n_rows() {
            return Err(Error::LengthMismatch {
                left: x.n_rows(),
                right: y.len(),
            });
        }
        check_binary(y)?;
        if params.n_trees == 0 {
            return Err(Error::invalid("n_trees", "must be at least 1"));
        }
        if x.n_rows() < params.min_samples_split.max(2) {
            return Err(Error::invalid(
                "min_samples_split",
                alloc::format!("{} rows is fewer than {}", x.n_rows(), params.min_samples_split.max(2)),
            ));
        }
        let positives = y.iter().filter(|&&l| l == 1).count();
        if positives == 0 || positives == y.len() {
            return Err(Error::SingleClass);
        }
        let feature_ids = match feature_ids {
            Some(ids) if ids.len() != x.n_cols() => {
                return Err(Error::LengthMismatch {
                    left: ids.len(),
                    right: x.n_cols(),
                })
            }
            Some(ids) => ids.to_vec(),
            None => (0..x.n_cols()).collect(),
        };
        let d = x.n_cols();
        let n_candidates = (libm::sqrt(d as f64) as usize).max(1);
        Ok(Self {
            x,
            y,
            params: *params,
            feature_ids,
            n_candidates,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.params.n_trees
    }

    pub fn build_tree(&self, index: usize) -> ExtraTree {
        let tree_seed = derive_seed(self.params.seed, tag::EXTRA_TREE, index as u64);
        let mut rows: Vec<usize> = (0..self.x.n_rows()).collect();
        let mut next_node = 0u64;
        let root = self.grow(tree_seed, &mut rows, 0, &mut next_node);
        ExtraTree { root }
    }

    pub fn finish(self, trees: Vec<ExtraTree>) -> ExtraTreesEstimator {
        ExtraTreesEstimator {
            params: self.params,
            n_features: self.x.n_cols(),
            feature_ids: self.feature_ids,
            trees,
        }
    }

    fn grow(&self, tree_seed: u64, rows: &mut [usize], depth: usize, next_node: &mut u64) -> TreeNode {
        let node_id = *next_node;
        *next_node += 1;
        let n = rows.len();
        let n_positive = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let leaf = TreeNode::Leaf {
            n_samples: n,
            n_positive,
        };
        if n < self.params.min_samples_split.max(2)
            || n_positive == 0
            || n_positive == n
            || self.params.max_depth.is_some_and(|cap| depth >= cap)
        {
            return leaf;
        }
        let node_seed = derive_seed(tree_seed, tag::EXTRA_NODE, node_id);
        let parent = gini(n, n_positive);

        // Visit features in hashed order until enough non-constant ones are
        // found, then keep the best (feature, random threshold) among them.
        let mut order: Vec<(f64, usize)> = (0..self.x.n_cols())
            .map(|c| (hashed_unit(node_seed, CANDIDATE_KEY, self.feature_ids[c] as u64), c))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(self.feature_ids[a.1].cmp(&self.feature_ids[b.1])));

        let mut chosen: Vec<(usize, f64)> = Vec::with_capacity(self.n_candidates);
        for &(_, c) in &order {
            if chosen.len() == self.n_candidates {
                break;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in rows.iter() {
                let v = self.x.get(r, c);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo < hi {
                let u = hashed_unit(node_seed, THRESHOLD_DRAW, self.feature_ids[c] as u64);
                chosen.push((c, open_threshold(lo, hi, u)));
            }
        }
        if chosen.is_empty() {
            return leaf;
        }
        // ascending stable id, so equal decreases resolve the same way under
        // any column permutation
        chosen.sort_by_key(|&(c, _)| self.feature_ids[c]);

        let mut best: Option<(usize, f64, f64)> = None;
        for &(c, thr) in &chosen {
            let (mut nl, mut pl) = (0usize, 0usize);
            for &r in rows.iter() {
                if self.x.get(r, c) < thr {
                    nl += 1;
                    pl += self.y[r] as usize;
                }
            }
            let decrease = split_decrease(n, n_positive, nl, pl);
            if best.is_none_or(|(_, _, d)| decrease > d) {
                best = Some((c, thr, decrease));
            }
        }
        let (feature, threshold, impurity_decrease) = best.expect("at least one candidate");

        let (yes, no): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x.get(r, feature) < threshold);
        let k = yes.len();
        rows[..k].copy_from_slice(&yes);
        rows[k..].copy_from_slice(&no);
        let (left_rows, right_rows) = rows.split_at_mut(k);
        let left = self.grow(tree_seed, left_rows, depth + 1, next_node);
        let right = self.grow(tree_seed, right_rows, depth + 1, next_node);
        TreeNode::Split {
            feature,
            threshold,
            n_samples: n,
            n_positive,
            impurity: parent,
            impurity_decrease,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

fn open_threshold(lo: f64, hi: f64, u: f64) -> f64 {
    let v = lo + u * (hi - lo);
    if v > lo && v < hi {
        return v;
    }
    let mid = lo + (hi - lo) * 0.5;
    if mid > lo && mid < hi {
        mid
    } else {
        hi
    }
}

/// Gini decrease of splitting `(n, p)` into a left part `(nl, pl)` and the rest.
pub fn split_decrease(n: usize, p: usize, nl: usize, pl: usize) -> f64 {
    let nr = n - nl;
    let pr = p - pl;
    let w = |k: usize| k as f64 / n as f64;
    let d = gini(n, p) - w(nl) * gini(nl, pl) - w(nr) * gini(nr, pr);
    d.max(0.0)
}

pub fn fit_extra_trees(x: &Matrix, y: &[u8], params: &ExtraTreesParams) -> Result<ExtraTreesEstimator> {
    fit_extra_trees_with_ids(x, y, params, None)
}

pub fn fit_extra_trees_with_ids(
    x: &Matrix,
    y: &[u8],
    params: &ExtraTreesParams,
    feature_ids: Option<&[usize]>,
) -> Result<ExtraTreesEstimator> {
    let builder = ExtraTreesBuilder::new(x, y, params, feature_ids)?;
    let trees = (0..builder.n_trees()).map(|i| builder.build_tree(i)).collect();
    Ok(builder.finish(trees))
}

/// Mean over trees of per-tree normalised importances. Trees that never
/// split are left out of the mean.
pub fn feature_importances(est: &ExtraTreesEstimator) -> Result<FeatureRanking> {
    let mut acc = alloc::vec![0.0; est.n_features];
    let mut contributing = 0usize;
    for tree in &est.trees {
        if let Some(imp) = tree.importances(est.n_features) {
            acc.iter_mut().zip(&imp).for_each(|(a, v)| *a += v);
            contributing += 1;
        }
    }
    if contributing == 0 {
        return Err(Error::NoSplits);
    }
    acc.iter_mut().for_each(|a| *a /= contributing as f64);
    // re-normalise away the rounding of the mean
    let sum: f64 = acc.iter().sum();
    acc.iter_mut().for_each(|a| *a /= sum);
    Ok(FeatureRanking::from_importances(acc))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Elimination {
    pub round: usize,
    /// Original column index.
    pub removed: usize,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    /// Surviving original column indices, ascending.
    pub selected: Vec<usize>,
    pub trace: Vec<Elimination>,
    /// Ranking from a final fit on the selected columns, positions relative
    /// to `selected`.
    pub ranking: FeatureRanking,
}

impl RfeResult {
    /// Original indices of the selected columns by descending importance.
    pub fn ranked_selected(&self) -> Vec<usize> {
        self.ranking.order.iter().map(|&p| self.selected[p]).collect()
    }
}

pub fn rfe_select(
    x: &Matrix,
    y: &[u8],
    target_count: usize,
    step: usize,
    params: &ExtraTreesParams,
) -> Result<RfeResult> {
    rfe_select_with(x, y, target_count, step, params, |x, y, p, ids| {
        fit_extra_trees_with_ids(x, y, p, Some(ids))
    })
}

/// Recursive elimination with a caller-supplied estimator fit, e.g. one that
/// grows trees in parallel. `fit` receives the surviving columns and their
/// original indices as ids.
pub fn rfe_select_with<F>(
    x: &Matrix,
    y: &[u8],
    target_count: usize,
    step: usize,
    params: &ExtraTreesParams,
    mut fit: F,
) -> Result<RfeResult>
where
    F: FnMut(&Matrix, &[u8], &ExtraTreesParams, &[usize]) -> Result<ExtraTreesEstimator>,
{
    let d = x.n_cols();
    if target_count == 0 || target_count >= d {
        return Err(Error::invalid(
            "target_count",
            alloc::format!("{target_count} must be in [1, {})", d),
        ));
    }
    if step == 0 {
        return Err(Error::invalid("step", "must be at least 1"));
    }
    let mut surviving: Vec<usize> = (0..d).collect();
    let mut trace = Vec::new();
    let mut round = 0usize;
    let round_params = |round: usize| ExtraTreesParams {
        seed: derive_seed(params.seed, tag::RFE, round as u64),
        ..*params
    };
    while surviving.len() > target_count {
        let sub = x.select_columns(&surviving);
        let est = fit(&sub, y, &round_params(round), &surviving)?;
        let ranking = feature_importances(&est)?;
        let drop = step.min(surviving.len() - target_count);
        // lowest importance first; equal importances drop the higher index
        let mut weakest: Vec<usize> = (0..surviving.len()).collect();
        weakest.sort_by(|&a, &b| {
            ranking.importances[a]
                .total_cmp(&ranking.importances[b])
                .then(surviving[b].cmp(&surviving[a]))
        });
        let mut removed: Vec<usize> = weakest[..drop].to_vec();
        for &pos in &removed {
            trace.push(Elimination {
                round,
                removed: surviving[pos],
                importance: ranking.importances[pos],
            });
        }
        removed.sort_unstable();
        for pos in removed.into_iter().rev() {
            surviving.remove(pos);
        }
        round += 1;
    }
    let sub = x.select_columns(&surviving);
    let est = fit(&sub, y, &round_params(round), &surviving)?;
    let ranking = feature_importances(&est)?;
    Ok(RfeResult {
        selected: surviving,
        trace,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn separable(n: usize) -> (Matrix, Vec<u8>) {
        // feature 1 separates at 0.5; features 0 and 2 are arbitrary
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let a = ((i * 7919) % 101) as f64 / 101.0;
            let b = ((i * 104_729) % 97) as f64 / 97.0;
            let label = (i % 2) as u8;
            let sep = if label == 1 { 0.6 + 0.3 * a } else { 0.1 + 0.3 * b };
            rows.push([b, sep, a]);
            y.push(label);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert_eq!(
            fit_extra_trees(&x, &[1, 1, 1], &ExtraTreesParams::default()).unwrap_err(),
            Error::SingleClass
        );
        let empty = Matrix::new(0, 0, vec![]).unwrap();
        assert!(fit_extra_trees(&empty, &[], &ExtraTreesParams::default()).is_err());
    }

    /// Every feature has disjoint class ranges, so any split reduces impurity.
    fn all_informative(n: usize) -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let a = ((i * 7919) % 101) as f64 / 101.0;
            let l = label as f64;
            rows.push([l + 0.9 * a, 2.0 * l + 0.5 * (1.0 - a), -l - 0.3 * a]);
            y.push(label);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn stump_puts_all_importance_on_its_feature() {
        let (x, y) = all_informative(40);
        let params = ExtraTreesParams {
            n_trees: 1,
            max_depth: Some(1),
            ..Default::default()
        };
        let est = fit_extra_trees(&x, &y, &params).unwrap();
        assert_eq!(est.trees[0].root.n_splits(), 1);
        let ranking = feature_importances(&est).unwrap();
        let TreeNode::Split { feature, .. } = est.trees[0].root else { unreachable!() };
        assert_eq!(ranking.importances[feature], 1.0);
        assert_eq!(ranking.importances.iter().sum::<f64>(), 1.0);
    }

    fn one_split_tree(feature: usize) -> ExtraTree {
        ExtraTree {
            root: TreeNode::Split {
                feature,
                threshold: 0.0,
                n_samples: 4,
                n_positive: 2,
                impurity: 0.5,
                impurity_decrease: 0.5,
                left: Box::new(TreeNode::Leaf {
                    n_samples: 2,
                    n_positive: 0,
                }),
                right: Box::new(TreeNode::Leaf {
                    n_samples: 2,
                    n_positive: 2,
                }),
            },
        }
    }

    fn estimator(trees: Vec<ExtraTree>) -> ExtraTreesEstimator {
        ExtraTreesEstimator {
            params: ExtraTreesParams::default(),
            n_features: 3,
            feature_ids: vec![0, 1, 2],
            trees,
        }
    }

    #[test]
    fn importances_average_over_trees() {
        let r = feature_importances(&estimator(vec![one_split_tree(0), one_split_tree(0)])).unwrap();
        assert_eq!(r.importances, vec![1.0, 0.0, 0.0]);
        let r = feature_importances(&estimator(vec![one_split_tree(0), one_split_tree(1)])).unwrap();
        assert_eq!(r.importances, vec![0.5, 0.5, 0.0]);
        assert_eq!(r.order, vec![0, 1, 2]);
        let leafless = ExtraTree {
            root: TreeNode::Leaf {
                n_samples: 3,
                n_positive: 1,
            },
        };
        assert_eq!(feature_importances(&estimator(vec![leafless])), Err(Error::NoSplits));
    }

    #[test]
    fn split_decrease_matches_definition() {
        assert_eq!(split_decrease(4, 2, 2, 0), 0.5);
        assert_eq!(split_decrease(4, 2, 2, 1), 0.0);
        assert!((gini(3, 1) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn rfe_argument_checks() {
        let (x, y) = separable(20);
        let p = ExtraTreesParams::default();
        assert!(rfe_select(&x, &y, 3, 1, &p).is_err());
        assert!(rfe_select(&x, &y, 0, 1, &p).is_err());
        assert!(rfe_select(&x, &y, 2, 0, &p).is_err());
    }

    #[test]
    fn rfe_one_below_full_runs_one_round() {
        let (x, y) = separable(60);
        let r = rfe_select(&x, &y, 2, 1, &ExtraTreesParams::default()).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].round, 0);
        assert_eq!(r.selected.len(), 2);
        assert!(!r.selected.contains(&r.trace[0].removed));
        assert!(r.selected.contains(&1));
    }
}
