use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{check_training, dot, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 300,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LogisticConfig,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-z.abs()))
}

/// Mean log loss plus `l2/2 · ‖w‖²` (the bias is not penalised).
pub fn loss(weights: &[f64], bias: f64, x: &Matrix, y: &[u8], l2: f64) -> f64 {
    let n = x.n_rows() as f64;
    let data: f64 = x
        .rows()
        .zip(y)
        .map(|(row, &label)| {
            let z = dot(weights, row) + bias;
            softplus(z) - label as f64 * z
        })
        .sum::<f64>()
        / n;
    data + 0.5 * l2 * dot(weights, weights)
}

/// Gradient of [`loss`] with respect to `(weights, bias)`.
pub fn gradient(weights: &[f64], bias: f64, x: &Matrix, y: &[u8], l2: f64) -> (Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut gw = alloc::vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let residual = sigmoid(dot(weights, row) + bias) - label as f64;
        gw.iter_mut().zip(row).for_each(|(g, v)| *g += residual * v);
        gb += residual;
    }
    gw.iter_mut()
        .zip(weights)
        .for_each(|(g, w)| *g = *g / n + l2 * w);
    (gw, gb / n)
}

pub fn fit(x: &Matrix, y: &[u8], config: &LogisticConfig) -> Result<LogisticModel> {
    fit_traced(x, y, config).map(|(m, _)| m)
}

/// Full-batch gradient descent from zero weights; also returns the loss
/// before every update.
pub fn fit_traced(x: &Matrix, y: &[u8], config: &LogisticConfig) -> Result<(LogisticModel, Vec<f64>)> {
    check_training(x, y)?;
    if !(config.learning_rate > 0.0) || !(config.l2 >= 0.0) {
        return Err(Error::invalid("logistic", "learning_rate must be > 0 and l2 >= 0"));
    }
    let mut weights = alloc::vec![0.0; x.n_cols()];
    let mut bias = 0.0;
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let current = loss(&weights, bias, x, y, config.l2);
        if !current.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        trace.push(current);
        let (gw, gb) = gradient(&weights, bias, x, y, config.l2);
        weights
            .iter_mut()
            .zip(&gw)
            .for_each(|(w, g)| *w -= config.learning_rate * g);
        bias -= config.learning_rate * gb;
    }
    if !loss(&weights, bias, x, y, config.l2).is_finite() || !bias.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok((
        LogisticModel {
            weights,
            bias,
            config: *config,
        },
        trace,
    ))
}

impl LogisticModel {
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.weights.len())?;
        Ok(x.rows().map(|r| sigmoid(dot(&self.weights, r) + self.bias)).collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self.score(x)?.into_iter().map(|p| u8::from(p >= 0.5)).collect())
    }
}
