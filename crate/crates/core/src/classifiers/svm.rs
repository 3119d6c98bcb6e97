use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{check_training, dot};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 300,
        }
    }
}

/// Linear SVM trained in the primal. The bias is handled as the weight of a
/// constant input and is regularised with the other weights.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

#[inline]
fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Mean hinge loss `max(0, 1 - y (w·x + b))` with `y ∈ {-1, +1}`.
pub fn hinge_loss(weights: &[f64], bias: f64, x: &Matrix, y: &[u8]) -> f64 {
    x.rows()
        .zip(y)
        .map(|(row, &l)| (1.0 - signed(l) * (dot(weights, row) + bias)).max(0.0))
        .sum::<f64>()
        / x.n_rows() as f64
}

/// `λ/2 · (‖w‖² + b²)` plus the mean hinge loss.
pub fn objective(weights: &[f64], bias: f64, x: &Matrix, y: &[u8], lambda: f64) -> f64 {
    0.5 * lambda * (dot(weights, weights) + bias * bias) + hinge_loss(weights, bias, x, y)
}

/// A subgradient of [`objective`]; the gradient wherever no margin equals 1.
pub fn subgradient(weights: &[f64], bias: f64, x: &Matrix, y: &[u8], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut gw: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut gb = lambda * bias;
    for (row, &l) in x.rows().zip(y) {
        let t = signed(l);
        if t * (dot(weights, row) + bias) < 1.0 {
            gw.iter_mut().zip(row).for_each(|(g, v)| *g -= t * v / n);
            gb -= t / n;
        }
    }
    (gw, gb)
}

pub fn fit(x: &Matrix, y: &[u8], config: &SvmConfig) -> Result<LinearSvmModel> {
    fit_traced(x, y, config).map(|(m, _)| m)
}

/// Full-batch subgradient descent with step `1 / (λ t)` and projection onto
/// the ball of radius `1/√λ`. Returns the mean hinge loss after every epoch.
pub fn fit_traced(x: &Matrix, y: &[u8], config: &SvmConfig) -> Result<(LinearSvmModel, Vec<f64>)> {
    check_training(x, y)?;
    if !(config.lambda > 0.0) {
        return Err(Error::invalid("lambda", "must be > 0"));
    }
    if config.epochs == 0 {
        return Err(Error::invalid("epochs", "must be at least 1"));
    }
    let lambda = config.lambda;
    let radius = 1.0 / libm::sqrt(lambda);
    let mut weights = alloc::vec![0.0; x.n_cols()];
    let mut bias = 0.0;
    let mut trace = Vec::with_capacity(config.epochs);
    for t in 1..=config.epochs {
        let eta = 1.0 / (lambda * t as f64);
        let (gw, gb) = subgradient(&weights, bias, x, y, lambda);
        weights.iter_mut().zip(&gw).for_each(|(w, g)| *w -= eta * g);
        bias -= eta * gb;
        let norm = libm::sqrt(dot(&weights, &weights) + bias * bias);
        if norm > radius {
            let shrink = radius / norm;
            weights.iter_mut().for_each(|w| *w *= shrink);
            bias *= shrink;
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        trace.push(hinge_loss(&weights, bias, x, y));
    }
    Ok((LinearSvmModel { weights, bias, lambda }, trace))
}

impl LinearSvmModel {
    /// Raw margin `w·x + b`.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.weights.len())?;
        Ok(x.rows().map(|r| dot(&self.weights, r) + self.bias).collect())
    }

    /// Margin `≥ 0` predicts class 1.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self.score(x)?.into_iter().map(|m| u8::from(m >= 0.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_weights_predict_positive() {
        let m = LinearSvmModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            lambda: 1e-4,
        };
        let x = Matrix::from_rows(&[[1.0, 2.0], [-3.0, 4.0]]).unwrap();
        assert_eq!(m.score(&x).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.predict(&x).unwrap(), vec![1, 1]);
    }

    #[test]
    fn separable_margin_drives_hinge_to_zero() {
        let x = Matrix::from_rows(&[[-2.0, 0.5], [-1.5, -0.5], [-3.0, 0.0], [2.0, 0.3], [1.5, -0.2], [2.5, 0.1]])
            .unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let (m, trace) = fit_traced(&x, &y, &SvmConfig { lambda: 0.01, epochs: 200 }).unwrap();
        assert!(*trace.last().unwrap() < 1e-9, "{:?}", trace.last());
        assert_eq!(m.predict(&x).unwrap(), y.to_vec());
    }

    #[test]
    fn scaling_inputs_keeps_sign_pattern_of_scaled_model() {
        let m = LinearSvmModel {
            weights: vec![0.7, -1.3],
            bias: 0.0,
            lambda: 1.0,
        };
        let x = Matrix::from_rows(&[[1.0, 0.2], [0.1, 0.9], [-0.4, -0.4]]).unwrap();
        let x2 = Matrix::new(3, 2, x.as_slice().iter().map(|v| v * 2.0).collect()).unwrap();
        let half = LinearSvmModel {
            weights: vec![0.35, -0.65],
            ..m.clone()
        };
        assert_eq!(m.predict(&x).unwrap(), m.predict(&x2).unwrap());
        assert_eq!(m.score(&x).unwrap(), half.score(&x2).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        let x = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        assert!(fit(&x, &[1, 0], &SvmConfig { lambda: 0.0, epochs: 5 }).is_err());
        assert!(fit(&x, &[1, 0], &SvmConfig { lambda: 1.0, epochs: 0 }).is_err());
    }
}
