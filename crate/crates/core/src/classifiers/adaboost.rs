//! Discrete AdaBoost over axis-aligned decision stumps.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{check_training, require_both_classes};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdaBoostConfig {
    pub n_stumps: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self { n_stumps: 50 }
    }
}

/// `polarity` if `x[feature] > threshold`, else `-polarity`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
    /// Weighted training error when the stump was chosen.
    pub error: f64,
}

impl Stump {
    #[inline]
    pub fn vote(&self, x: &[f64]) -> f64 {
        let p = self.polarity as f64;
        if x[self.feature] > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AdaBoostModel {
    pub n_features: usize,
    pub stumps: Vec<Stump>,
}

/// Lowest weighted error stump; thresholds are midpoints between
/// consecutive distinct values. Ties keep the earliest feature, threshold
/// and positive polarity.
fn best_stump(x: &Matrix, signs: &[f64], weights: &[f64], sorted: &[Vec<usize>]) -> Option<(usize, f64, i8, f64)> {
    let total_pos: f64 = signs.iter().zip(weights).filter(|(s, _)| **s > 0.0).map(|(_, w)| w).sum();
    let total: f64 = weights.iter().sum();
    let total_neg = total - total_pos;
    let mut best: Option<(usize, f64, i8, f64)> = None;
    for (f, order) in sorted.iter().enumerate() {
        // weight of each class at or below the running threshold
        let (mut below_pos, mut below_neg) = (0.0, 0.0);
        for w in order.windows(2) {
            let (i, j) = (w[0], w[1]);
            if signs[i] > 0.0 {
                below_pos += weights[i];
            } else {
                below_neg += weights[i];
            }
            let (vi, vj) = (x.get(i, f), x.get(j, f));
            if vi == vj {
                continue;
            }
            let thr = vi + (vj - vi) * 0.5;
            // polarity +1 errs on positives below and negatives above
            let err_pos = below_pos + (total_neg - below_neg);
            let err_neg = total - err_pos;
            for (pol, err) in [(1i8, err_pos), (-1i8, err_neg)] {
                if best.is_none_or(|b| err < b.3) {
                    best = Some((f, thr, pol, err));
                }
            }
        }
    }
    best
}

pub fn fit(x: &Matrix, y: &[u8], config: &AdaBoostConfig) -> Result<AdaBoostModel> {
    check_training(x, y)?;
    require_both_classes(y)?;
    if config.n_stumps == 0 {
        return Err(Error::invalid("n_stumps", "must be at least 1"));
    }
    let n = y.len();
    let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let sorted: Vec<Vec<usize>> = (0..x.n_cols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut weights = alloc::vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    for _ in 0..config.n_stumps {
        let Some((feature, threshold, polarity, raw_error)) = best_stump(x, &signs, &weights, &sorted) else {
            return Err(Error::NoValidStump);
        };
        if raw_error >= 0.5 {
            break;
        }
        let error = raw_error.clamp(MIN_ERROR, 1.0 - MIN_ERROR);
        let alpha = 0.5 * libm::log((1.0 - error) / error);
        let stump = Stump {
            feature,
            threshold,
            polarity,
            alpha,
            error: raw_error,
        };
        for (i, w) in weights.iter_mut().enumerate() {
            *w *= libm::exp(-alpha * signs[i] * stump.vote(x.row(i)));
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        stumps.push(stump);
        if raw_error <= 0.0 {
            break;
        }
    }
    Ok(AdaBoostModel {
        n_features: x.n_cols(),
        stumps,
    })
}

impl AdaBoostModel {
    /// `Σ α_i h_i(x)` with `h_i ∈ {-1, +1}`.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.n_features)?;
        Ok(x
            .rows()
            .map(|r| self.stumps.iter().map(|s| s.alpha * s.vote(r)).sum())
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self.score(x)?.into_iter().map(|s| u8::from(s >= 0.0)).collect())
    }
}
