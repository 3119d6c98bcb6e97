//! Core algorithms for isolation-forest based outlier removal ahead of
//! supervised intrusion classification.
//!
//! The crate is `no_std` and only needs an allocator. Everything here is a
//! pure transformation over in-memory matrices; file formats, threading and
//! the command line live in the `isoguard` crate.
//!
//! - [`data`]: label encoding, standard scaling and train/test splitting.
//! - [`feature_selection`]: extremely randomized trees and recursive feature
//!   elimination.
//! - [`isolation_forest`]: iTrees, path lengths, anomaly scores and verdicts.
//! - [`classifiers`]: KNN, Gaussian naive Bayes, logistic regression, linear
//!   SVM and AdaBoost over decision stumps.
//! - [`evaluation`]: confusion counts, precision/recall/accuracy/F1, ROC and
//!   before/after comparison tables.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classifiers;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod feature_selection;
pub mod isolation_forest;
pub mod matrix;
pub mod rng;

pub use error::{Error, Result};
pub use matrix::Matrix;
