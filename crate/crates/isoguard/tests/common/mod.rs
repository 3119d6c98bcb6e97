#![allow(dead_code)]

use std::path::{Path, PathBuf};

use isoguard::config::PipelineConfig;
use isoguard::synth::{generate_synthetic, write_synthetic, SyntheticSpec};
use isoguard_core::isolation_forest::ThresholdSpec;

/// Writes a synthetic dataset into `dir` and returns its path.
pub fn synthetic_file(dir: &Path, spec: &SyntheticSpec) -> PathBuf {
    write_synthetic(dir, &generate_synthetic(spec).unwrap()).unwrap()
}

/// Config for the synthetic layout: five features kept, 5% contamination.
pub fn synthetic_config(input: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig { input: Some(input.to_path_buf()), ..Default::default() };
    cfg.feature_select.target_count = 5;
    cfg.iforest.threshold = ThresholdSpec::Contamination(0.05);
    cfg
}

pub fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}
