//! Baseline binary classifiers.
//!
//! Every model exposes a hard prediction and a continuous decision score in
//! which larger values mean "more likely anomaly" (label 1). Probabilistic
//! models score `P(1 | x)`; margin models score the raw margin.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{check_binary, Error, Result};
use crate::matrix::Matrix;

pub mod adaboost;
pub mod knn;
pub mod logistic;
pub mod naive_bayes;
pub mod svm;

pub use adaboost::{AdaBoostConfig, AdaBoostModel, Stump};
pub use knn::{KnnConfig, KnnModel};
pub use logistic::{LogisticConfig, LogisticModel};
pub use naive_bayes::{GaussianNbConfig, GaussianNbModel};
pub use svm::{LinearSvmModel, SvmConfig};

/// The five baselines, in the order reports list them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ClassifierKind {
    Knn,
    Svm,
    NaiveBayes,
    Logistic,
    AdaBoost,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Knn,
        ClassifierKind::Svm,
        ClassifierKind::NaiveBayes,
        ClassifierKind::Logistic,
        ClassifierKind::AdaBoost,
    ];

    /// Short display name: KNN, SVM, NB, LR, ABC.
    pub fn abbreviation(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::NaiveBayes => "NB",
            ClassifierKind::Logistic => "LR",
            ClassifierKind::AdaBoost => "ABC",
        }
    }

    /// Lowercase identifier used in file names.
    pub fn slug(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Svm => "svm",
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::Logistic => "lr",
            ClassifierKind::AdaBoost => "abc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ClassifierConfigs {
    pub knn: KnnConfig,
    pub naive_bayes: GaussianNbConfig,
    pub logistic: LogisticConfig,
    pub svm: SvmConfig,
    pub adaboost: AdaBoostConfig,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ClassifierModel {
    Knn(KnnModel),
    GaussianNb(GaussianNbModel),
    Logistic(LogisticModel),
    LinearSvm(LinearSvmModel),
    AdaBoost(AdaBoostModel),
}

impl ClassifierModel {
    pub fn fit(kind: ClassifierKind, x: &Matrix, y: &[u8], configs: &ClassifierConfigs) -> Result<Self> {
        Ok(match kind {
            ClassifierKind::Knn => ClassifierModel::Knn(knn::fit(x, y, &configs.knn)?),
            ClassifierKind::NaiveBayes => {
                ClassifierModel::GaussianNb(naive_bayes::fit(x, y, &configs.naive_bayes)?)
            }
            ClassifierKind::Logistic => ClassifierModel::Logistic(logistic::fit(x, y, &configs.logistic)?),
            ClassifierKind::Svm => ClassifierModel::LinearSvm(svm::fit(x, y, &configs.svm)?),
            ClassifierKind::AdaBoost => ClassifierModel::AdaBoost(adaboost::fit(x, y, &configs.adaboost)?),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Knn(_) => ClassifierKind::Knn,
            ClassifierModel::GaussianNb(_) => ClassifierKind::NaiveBayes,
            ClassifierModel::Logistic(_) => ClassifierKind::Logistic,
            ClassifierModel::LinearSvm(_) => ClassifierKind::Svm,
            ClassifierModel::AdaBoost(_) => ClassifierKind::AdaBoost,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassifierModel::Knn(m) => m.n_features(),
            ClassifierModel::GaussianNb(m) => m.n_features,
            ClassifierModel::Logistic(m) => m.weights.len(),
            ClassifierModel::LinearSvm(m) => m.weights.len(),
            ClassifierModel::AdaBoost(m) => m.n_features,
        }
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            ClassifierModel::Knn(m) => m.score(x),
            ClassifierModel::GaussianNb(m) => m.score(x),
            ClassifierModel::Logistic(m) => m.score(x),
            ClassifierModel::LinearSvm(m) => m.score(x),
            ClassifierModel::AdaBoost(m) => m.score(x),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        match self {
            ClassifierModel::Knn(m) => m.predict(x),
            ClassifierModel::GaussianNb(m) => m.predict(x),
            ClassifierModel::Logistic(m) => m.predict(x),
            ClassifierModel::LinearSvm(m) => m.predict(x),
            ClassifierModel::AdaBoost(m) => m.predict(x),
        }
    }
}

/// Shared shape checks for training inputs.
pub(crate) fn check_training(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    check_binary(y)
}

pub(crate) fn require_both_classes(y: &[u8]) -> Result<usize> {
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(positives)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}
