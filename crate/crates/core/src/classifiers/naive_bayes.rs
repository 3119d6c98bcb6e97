use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::{check_training, require_both_classes};
use crate::error::Result;
use crate::matrix::Matrix;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GaussianNbConfig {
    pub var_smoothing: f64,
}

impl Default for GaussianNbConfig {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

/// Gaussian naive Bayes with per-class, per-feature mean and variance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GaussianNbModel {
    pub n_features: usize,
    /// Indexed by class label.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Smoothed, strictly positive.
    pub variances: [Vec<f64>; 2],
    pub var_smoothing: f64,
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

pub fn fit(x: &Matrix, y: &[u8], config: &GaussianNbConfig) -> Result<GaussianNbModel> {
    check_training(x, y)?;
    let positives = require_both_classes(y)?;
    let d = x.n_cols();
    let n = y.len() as f64;

    // smoothing is relative to the widest feature over the whole sample
    let max_var = (0..d)
        .map(|c| population_variance((0..x.n_rows()).map(|r| x.get(r, c))).1)
        .fold(0.0, f64::max);
    let epsilon = if max_var > 0.0 {
        config.var_smoothing * max_var
    } else {
        config.var_smoothing
    }
    .max(f64::MIN_POSITIVE);

    let mut means: [Vec<f64>; 2] = [Vec::with_capacity(d), Vec::with_capacity(d)];
    let mut variances: [Vec<f64>; 2] = [Vec::with_capacity(d), Vec::with_capacity(d)];
    for class in 0..2u8 {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        for c in 0..d {
            let (mean, var) = population_variance(rows.iter().map(|&r| x.get(r, c)));
            means[class as usize].push(mean);
            variances[class as usize].push(var + epsilon);
        }
    }
    let p1 = positives as f64 / n;
    Ok(GaussianNbModel {
        n_features: d,
        priors: [1.0 - p1, p1],
        means,
        variances,
        var_smoothing: config.var_smoothing,
    })
}

impl GaussianNbModel {
    /// `ln P(class) + Σ ln N(x_j; μ, σ²)` for both classes.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (class, slot) in out.iter_mut().enumerate() {
            let mut ll = libm::log(self.priors[class]);
            for ((&v, &mu), &var) in x.iter().zip(&self.means[class]).zip(&self.variances[class]) {
                ll -= 0.5 * (LN_2PI + libm::log(var) + (v - mu) * (v - mu) / var);
            }
            *slot = ll;
        }
        out
    }

    /// `P(1 | x)` via log-sum-exp over the two joint likelihoods.
    pub fn posterior(&self, x: &[f64]) -> f64 {
        let [l0, l1] = self.joint_log_likelihood(x);
        let hi = l0.max(l1);
        let e0 = libm::exp(l0 - hi);
        let e1 = libm::exp(l1 - hi);
        e1 / (e0 + e1)
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.n_features)?;
        Ok(x.rows().map(|r| self.posterior(r)).collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        x.check_width(self.n_features)?;
        Ok(x
            .rows()
            .map(|r| {
                let [l0, l1] = self.joint_log_likelihood(r);
                u8::from(l1 > l0)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use alloc::vec;

    #[test]
    fn well_separated_classes() {
        let x = Matrix::from_rows(&[[-5.0], [-4.0], [-6.0], [4.0], [5.0], [6.0]]).unwrap();
        let m = fit(&x, &[0, 0, 0, 1, 1, 1], &GaussianNbConfig::default()).unwrap();
        let q = Matrix::from_rows(&[[5.0], [-5.0]]).unwrap();
        let s = m.score(&q).unwrap();
        assert!(s[0] > 0.5 && s[1] < 0.5);
        assert_eq!(m.predict(&q).unwrap(), vec![1, 0]);
        assert!((m.priors[0] + m.priors[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_midpoint_is_even() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [1.0], [2.0]]).unwrap();
        let m = fit(&x, &[0, 0, 1, 1], &GaussianNbConfig::default()).unwrap();
        let p = m.score(&Matrix::from_rows(&[[0.0]]).unwrap()).unwrap()[0];
        assert!((p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert_eq!(fit(&x, &[0, 0], &GaussianNbConfig::default()).unwrap_err(), Error::SingleClass);
    }

    #[test]
    fn within_class_constant_feature_stays_positive() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [3.0, 2.0], [3.0, 5.0]]).unwrap();
        let m = fit(&x, &[0, 0, 1, 1], &GaussianNbConfig::default()).unwrap();
        assert!(m.variances.iter().flatten().all(|&v| v > 0.0));
        let p = m.score(&x).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }
}
