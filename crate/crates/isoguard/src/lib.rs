//! File formats, parallel fits and the command-line pipeline built on
//! `isoguard-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod scatter;
pub mod synth;
pub mod tabular;

pub use error::{Error, Result};
