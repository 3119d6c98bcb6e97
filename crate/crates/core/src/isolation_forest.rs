//! Isolation forest: random axis-aligned partitioning of subsamples, where
//! anomalous points are separated after fewer splits than normal ones.
//!
//! For a forest grown on subsamples of size `m`, an instance `x` with mean
//! path length `E(h(x))` scores `s = 2^(-E(h(x)) / c(m))`, where `c(m)` is the
//! mean unsuccessful-search depth of a binary search tree with `m` keys.
//! Scores near 1 mark outliers; scores below 0.5 look normal.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, tag};

/// Euler-Mascheroni constant, truncated to ten decimals.
pub const EULER_GAMMA: f64 = 0.5772156649;

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_SUBSAMPLE: usize = 256;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Harmonic number approximation `H(i) = ln(i) + γ`.
pub fn harmonic(i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::invalid("i", "harmonic number of 0 is undefined"));
    }
    Ok(libm::log(i as f64) + EULER_GAMMA)
}

/// Average path length `c(m)` of an unsuccessful BST search over `m` keys.
pub fn expected_path_length(m: usize) -> f64 {
    match m {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let h = libm::log((m - 1) as f64) + EULER_GAMMA;
            2.0 * h - 2.0 * (m - 1) as f64 / m as f64
        }
    }
}

/// `⌈log2(m)⌉` for `m ≥ 1`.
pub fn height_limit(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ITreeNode {
    Internal {
        feature: usize,
        value: f64,
        left: Box<ITreeNode>,
        right: Box<ITreeNode>,
    },
    External {
        size: usize,
    },
}

impl ITreeNode {
    pub fn depth(&self) -> usize {
        match self {
            ITreeNode::External { .. } => 0,
            ITreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Sum of external-node sizes, which equals the subsample size.
    pub fn total_size(&self) -> usize {
        match self {
            ITreeNode::External { size } => *size,
            ITreeNode::Internal { left, right, .. } => left.total_size() + right.total_size(),
        }
    }

    pub fn n_external(&self) -> usize {
        match self {
            ITreeNode::External { .. } => 1,
            ITreeNode::Internal { left, right, .. } => left.n_external() + right.n_external(),
        }
    }
}

/// Builds an iTree over every row of `sample`, starting at depth 0.
pub fn build_itree<R: Rng + ?Sized>(sample: &Matrix, height_limit: usize, rng: &mut R) -> ITreeNode {
    let mut rows: Vec<usize> = (0..sample.n_rows()).collect();
    grow(sample, &mut rows, 0, height_limit, rng)
}

fn grow<R: Rng + ?Sized>(
    x: &Matrix,
    rows: &mut [usize],
    depth: usize,
    height_limit: usize,
    rng: &mut R,
) -> ITreeNode {
    if rows.len() <= 1 || depth >= height_limit {
        return ITreeNode::External { size: rows.len() };
    }
    let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
    for f in 0..x.n_cols() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows.iter() {
            let v = x.get(r, f);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo < hi {
            candidates.push((f, lo, hi));
        }
    }
    if candidates.is_empty() {
        return ITreeNode::External { size: rows.len() };
    }
    let (feature, lo, hi) = candidates[rng.random_range(0..candidates.len())];
    let value = rng::uniform_open(rng, lo, hi);
    let split = partition(rows, |r| x.get(r, feature) < value);
    let (left_rows, right_rows) = rows.split_at_mut(split);
    let left = grow(x, left_rows, depth + 1, height_limit, rng);
    let right = grow(x, right_rows, depth + 1, height_limit, rng);
    ITreeNode::Internal {
        feature,
        value,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Moves rows satisfying `pred` to the front, keeping relative order, and
/// returns how many there are.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| pred(r));
    let k = yes.len();
    rows[..k].copy_from_slice(&yes);
    rows[k..].copy_from_slice(&no);
    k
}

/// Path length of `x` from `depth`, adjusted by `c(size)` at the external node.
pub fn path_length(tree: &ITreeNode, x: &[f64], depth: usize) -> f64 {
    let mut node = tree;
    let mut depth = depth;
    loop {
        match node {
            ITreeNode::External { size } => return depth as f64 + expected_path_length(*size),
            ITreeNode::Internal {
                feature,
                value,
                left,
                right,
            } => {
                node = if x[*feature] < *value { left } else { right };
                depth += 1;
            }
        }
    }
}

/// Converts a mean path length to an anomaly score under normaliser `c(m)`.
#[inline]
pub fn normalized_score(mean_path_length: f64, c_m: f64) -> f64 {
    libm::pow(2.0, -mean_path_length / c_m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnomalyScore {
    /// Normalised score in `(0, 1]`.
    pub score: f64,
    pub mean_path_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Verdict {
    Normal,
    Outlier,
}

impl Verdict {
    /// `+1` for normal, `-1` for outlier.
    pub fn label(self) -> i8 {
        match self {
            Verdict::Normal => 1,
            Verdict::Outlier => -1,
        }
    }

    pub fn is_outlier(self) -> bool {
        self == Verdict::Outlier
    }

    pub fn from_label(label: i8) -> Option<Self> {
        match label {
            1 => Some(Verdict::Normal),
            -1 => Some(Verdict::Outlier),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierVerdict {
    pub verdict: Verdict,
    pub score: AnomalyScore,
}

/// How scores are turned into verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", content = "value", rename_all = "lowercase"))]
pub enum ThresholdSpec {
    /// Outlier iff `s ≥ τ`.
    Fixed(f64),
    /// The `⌈fraction · n⌉` highest scores are outliers, ties going to the
    /// lower row index.
    Contamination(f64),
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::Fixed(DEFAULT_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` uses `min(256, n_rows)`.
    pub subsample_size: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            subsample_size: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IsolationForest {
    pub t: usize,
    pub m: usize,
    pub height_limit: usize,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<ITreeNode>,
}

/// Validated fit inputs; trees can be built independently by index.
pub struct ForestBuilder<'a> {
    x: &'a Matrix,
    n_trees: usize,
    m: usize,
    height_limit: usize,
    seed: u64,
}

impl<'a> ForestBuilder<'a> {
    pub fn new(x: &'a Matrix, params: &ForestParams) -> Result<Self> {
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::invalid("x", "at least two rows are needed"));
        }
        if params.n_trees == 0 {
            return Err(Error::invalid("n_trees", "must be at least 1"));
        }
        let m = params.subsample_size.unwrap_or(DEFAULT_SUBSAMPLE.min(n));
        if m < 2 || m > n {
            return Err(Error::invalid(
                "subsample_size",
                alloc::format!("{m} is outside [2, {n}]"),
            ));
        }
        Ok(Self {
            x,
            n_trees: params.n_trees,
            m,
            height_limit: height_limit(m),
            seed: params.seed,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.n_trees
    }

    /// Tree `index`, grown from its own without-replacement subsample.
    pub fn build_tree(&self, index: usize) -> ITreeNode {
        let mut rng = rng::stream(self.seed, tag::FOREST_TREE, index as u64);
        let mut rows = rng::sample_indices(&mut rng, self.x.n_rows(), self.m);
        grow(self.x, &mut rows, 0, self.height_limit, &mut rng)
    }

    pub fn finish(self, trees: Vec<ITreeNode>) -> IsolationForest {
        debug_assert_eq!(trees.len(), self.n_trees);
        IsolationForest {
            t: self.n_trees,
            m: self.m,
            height_limit: self.height_limit,
            seed: self.seed,
            n_features: self.x.n_cols(),
            trees,
        }
    }
}

impl IsolationForest {
    pub fn fit(x: &Matrix, params: &ForestParams) -> Result<Self> {
        let builder = ForestBuilder::new(x, params)?;
        let trees = (0..builder.n_trees()).map(|i| builder.build_tree(i)).collect();
        Ok(builder.finish(trees))
    }

    pub fn normalizer(&self) -> f64 {
        expected_path_length(self.m)
    }

    pub fn score(&self, x: &[f64]) -> Result<AnomalyScore> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let total: f64 = self.trees.iter().map(|t| path_length(t, x, 0)).sum();
        let mean = total / self.trees.len() as f64;
        Ok(AnomalyScore {
            score: normalized_score(mean, self.normalizer()),
            mean_path_length: mean,
        })
    }

    pub fn score_all(&self, x: &Matrix) -> Result<Vec<AnomalyScore>> {
        x.check_width(self.n_features)?;
        x.rows().map(|r| self.score(r)).collect()
    }

    pub fn predict(&self, x: &Matrix, threshold: ThresholdSpec) -> Result<Vec<OutlierVerdict>> {
        let scores = self.score_all(x)?;
        verdicts(&scores, threshold)
    }
}

/// Applies a threshold rule to precomputed scores.
pub fn verdicts(scores: &[AnomalyScore], threshold: ThresholdSpec) -> Result<Vec<OutlierVerdict>> {
    let outlier = match threshold {
        ThresholdSpec::Fixed(tau) => {
            if tau.is_nan() {
                return Err(Error::invalid("threshold", "NaN"));
            }
            scores.iter().map(|s| s.score >= tau).collect::<Vec<_>>()
        }
        ThresholdSpec::Contamination(fraction) => {
            if !(fraction > 0.0 && fraction <= 0.5) {
                return Err(Error::invalid(
                    "contamination",
                    alloc::format!("{fraction} is outside (0, 0.5]"),
                ));
            }
            let n = scores.len();
            // guard against 0.07 * 100 = 7.000000000000001
            let k = (libm::ceil(fraction * n as f64 - 1e-9) as usize).min(n);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                scores[b]
                    .score
                    .total_cmp(&scores[a].score)
                    .then(a.cmp(&b))
            });
            let mut flags = alloc::vec![false; n];
            for &i in &order[..k] {
                flags[i] = true;
            }
            flags
        }
    };
    Ok(scores
        .iter()
        .zip(outlier)
        .map(|(&score, o)| OutlierVerdict {
            verdict: if o { Verdict::Outlier } else { Verdict::Normal },
            score,
        })
        .collect())
}
