use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::check_training;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Brute-force k-nearest neighbours over Euclidean distance.
///
/// Distance ties go to the lower training row; an even vote split predicts
/// class 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KnnModel {
    pub k: usize,
    pub train: Matrix,
    pub labels: Vec<u8>,
}

pub fn fit(x: &Matrix, y: &[u8], config: &KnnConfig) -> Result<KnnModel> {
    check_training(x, y)?;
    if config.k == 0 || config.k > x.n_rows() {
        return Err(Error::invalid(
            "k",
            alloc::format!("{} must be in [1, {}]", config.k, x.n_rows()),
        ));
    }
    Ok(KnnModel {
        k: config.k,
        train: x.clone(),
        labels: y.to_vec(),
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.train.n_cols()
    }

    /// Number of positive labels among the `k` nearest training rows.
    fn positive_votes(&self, query: &[f64], scratch: &mut Vec<(f64, usize)>) -> usize {
        scratch.clear();
        scratch.extend(self.train.rows().enumerate().map(|(i, row)| {
            let d: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        }));
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < scratch.len() {
            scratch.select_nth_unstable_by(self.k - 1, by_distance);
        }
        scratch[..self.k].iter().filter(|&&(_, i)| self.labels[i] == 1).count()
    }

    fn votes(&self, x: &Matrix) -> Result<Vec<usize>> {
        x.check_width(self.n_features())?;
        let mut scratch = Vec::with_capacity(self.train.n_rows());
        Ok(x.rows().map(|q| self.positive_votes(q, &mut scratch)).collect())
    }

    /// Fraction of the `k` neighbours labelled 1.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self
            .votes(x)?
            .into_iter()
            .map(|v| v as f64 / self.k as f64)
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self
            .votes(x)?
            .into_iter()
            .map(|v| u8::from(2 * v > self.k))
            .collect())
    }
}
