//! Pipeline configuration, read from JSON and resolved against the command
//! line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use isoguard_core::classifiers::ClassifierConfigs;
use isoguard_core::data::{ColumnKind, SplitSpec};
use isoguard_core::feature_selection::ExtraTreesParams;
use isoguard_core::isolation_forest::{ForestParams, ThresholdSpec, DEFAULT_TREES};
use isoguard_core::rng::{derive_seed, tag};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::read_json;
use crate::tabular::{LoadOptions, DEFAULT_TARGET};

pub const RESOLVED_FILE: &str = "config.resolved.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSelectConfig {
    pub target_count: usize,
    /// Columns dropped per elimination round.
    pub step: usize,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for FeatureSelectConfig {
    fn default() -> Self {
        let est = ExtraTreesParams::default();
        Self {
            target_count: 15,
            step: 1,
            n_trees: est.n_trees,
            max_depth: est.max_depth,
            min_samples_split: est.min_samples_split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IForestConfig {
    /// Number of trees.
    pub t: usize,
    /// Subsample size; `null` uses `min(256, training rows)`.
    pub m: Option<usize>,
    pub threshold: ThresholdSpec,
}

impl Default for IForestConfig {
    fn default() -> Self {
        Self { t: DEFAULT_TREES, m: None, threshold: ThresholdSpec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2, stratified: true }
    }
}

/// Scatter axes; unset axes take the top-ranked selected features.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub x_col: Option<String>,
    pub y_col: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub target: String,
    /// Declared column kinds; undeclared columns are inferred.
    pub schema: Option<BTreeMap<String, ColumnKind>>,
    pub feature_select: FeatureSelectConfig,
    pub iforest: IForestConfig,
    pub split: SplitConfig,
    pub classifiers: ClassifierConfigs,
    pub scatter: ScatterConfig,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            target: DEFAULT_TARGET.to_string(),
            schema: None,
            feature_select: FeatureSelectConfig::default(),
            iforest: IForestConfig::default(),
            split: SplitConfig::default(),
            classifiers: ClassifierConfigs::default(),
            scatter: ScatterConfig::default(),
            output: None,
            seed: None,
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; a relative `input` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = read_json(path)?;
        if let Some(input) = &cfg.input {
            if input.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.input = Some(base.join(input));
            }
        }
        Ok(cfg)
    }

    /// Applies command-line overrides and checks that every required value
    /// is present.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<&Path>) -> Result<ResolvedConfig> {
        if seed.is_some() {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.output = Some(out.to_path_buf());
        }
        let seed = self.seed.ok_or_else(|| Error::Usage("a master seed is required (--seed or \"seed\")".into()))?;
        let input = self.input.clone().ok_or_else(|| Error::Usage("no input file (\"input\")".into()))?;
        let output = self.output.clone().ok_or_else(|| Error::Usage("no output directory (--out or \"output\")".into()))?;
        if self.feature_select.step == 0 {
            return Err(Error::Usage("feature_select.step must be at least 1".into()));
        }
        Ok(ResolvedConfig { config: self, seed, input, output })
    }
}

/// Configuration with the master seed and both paths fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: PipelineConfig,
    pub seed: u64,
    pub input: PathBuf,
    pub output: PathBuf,
}

/// Sub-seeds of each randomised stage, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub split: u64,
    pub feature_select: u64,
    pub iforest: u64,
}

impl ResolvedConfig {
    pub fn seeds(&self) -> StageSeeds {
        StageSeeds {
            split: derive_seed(self.seed, tag::SPLIT, 0),
            feature_select: derive_seed(self.seed, tag::RFE, 0),
            iforest: derive_seed(self.seed, tag::FOREST, 0),
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions { target: self.config.target.clone(), schema: self.config.schema.clone() }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.config.split.test_fraction,
            seed: self.seeds().split,
            stratified: self.config.split.stratified,
        }
    }

    pub fn extra_trees(&self) -> ExtraTreesParams {
        let fs = &self.config.feature_select;
        ExtraTreesParams {
            n_trees: fs.n_trees,
            max_depth: fs.max_depth,
            min_samples_split: fs.min_samples_split,
            seed: self.seeds().feature_select,
        }
    }

    pub fn forest(&self) -> ForestParams {
        ForestParams { n_trees: self.config.iforest.t, subsample_size: self.config.iforest.m, seed: self.seeds().iforest }
    }

    /// The config as written to `config.resolved.json`: every field filled.
    pub fn to_config(&self) -> PipelineConfig {
        PipelineConfig {
            input: Some(self.input.clone()),
            output: Some(self.output.clone()),
            seed: Some(self.seed),
            ..self.config.clone()
        }
    }
}
