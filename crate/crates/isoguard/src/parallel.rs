//! Thread-pool backed fits. Every tree draws from its own seeded stream, so
//! results do not depend on the number of workers.

use isoguard_core::classifiers::{ClassifierConfigs, ClassifierKind, ClassifierModel};
use isoguard_core::feature_selection::{
    rfe_select_with, ExtraTreesBuilder, ExtraTreesEstimator, ExtraTreesParams, RfeResult,
};
use isoguard_core::isolation_forest::{AnomalyScore, ForestBuilder, ForestParams, IsolationForest};
use isoguard_core::Matrix;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "ISOGUARD_THREADS";

/// Worker pool sized by `ISOGUARD_THREADS`; unset or `0` lets rayon decide.
pub struct Runtime {
    pool: ThreadPool,
}

impl Runtime {
    pub fn from_env() -> Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
            _ => 0,
        };
        Self::with_threads(threads)
    }

    pub fn with_threads(threads: usize) -> Result<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn fit_forest(&self, x: &Matrix, params: &ForestParams) -> Result<IsolationForest> {
        let builder = ForestBuilder::new(x, params)?;
        let trees = self.pool.install(|| (0..builder.n_trees()).into_par_iter().map(|i| builder.build_tree(i)).collect());
        Ok(builder.finish(trees))
    }

    pub fn score_all(&self, forest: &IsolationForest, x: &Matrix) -> Result<Vec<AnomalyScore>> {
        let rows: Vec<&[f64]> = x.rows().collect();
        self.pool.install(|| rows.par_iter().map(|r| forest.score(r)).collect::<Result<Vec<_>, _>>()).map_err(Into::into)
    }

    pub fn fit_extra_trees(
        &self,
        x: &Matrix,
        y: &[u8],
        params: &ExtraTreesParams,
        feature_ids: Option<&[usize]>,
    ) -> Result<ExtraTreesEstimator> {
        let builder = ExtraTreesBuilder::new(x, y, params, feature_ids)?;
        let trees = self.pool.install(|| (0..builder.n_trees()).into_par_iter().map(|i| builder.build_tree(i)).collect());
        Ok(builder.finish(trees))
    }

    pub fn rfe(&self, x: &Matrix, y: &[u8], target: usize, step: usize, params: &ExtraTreesParams) -> Result<RfeResult> {
        rfe_select_with(x, y, target, step, params, |x, y, p, ids| {
            let builder = ExtraTreesBuilder::new(x, y, p, Some(ids))?;
            let trees = self.pool.install(|| (0..builder.n_trees()).into_par_iter().map(|i| builder.build_tree(i)).collect());
            Ok(builder.finish(trees))
        })
        .map_err(Into::into)
    }

    /// Fits each requested model; output order follows `kinds`.
    pub fn fit_classifiers(
        &self,
        kinds: &[ClassifierKind],
        x: &Matrix,
        y: &[u8],
        configs: &ClassifierConfigs,
    ) -> Result<Vec<ClassifierModel>> {
        self.pool
            .install(|| kinds.par_iter().map(|&k| ClassifierModel::fit(k, x, y, configs)).collect::<Result<Vec<_>, _>>())
            .map_err(Into::into)
    }

    /// Decision scores and hard predictions of `model` on every row.
    pub fn score_model(&self, model: &ClassifierModel, x: &Matrix) -> Result<(Vec<f64>, Vec<u8>)> {
        let chunk = 256;
        let starts: Vec<usize> = (0..x.n_rows()).step_by(chunk).collect();
        let parts = self.pool.install(|| {
            starts
                .par_iter()
                .map(|&s| {
                    let rows: Vec<usize> = (s..(s + chunk).min(x.n_rows())).collect();
                    let sub = x.select_rows(&rows);
                    Ok::<_, isoguard_core::Error>((model.score(&sub)?, model.predict(&sub)?))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut scores = Vec::with_capacity(x.n_rows());
        let mut preds = Vec::with_capacity(x.n_rows());
        for (s, p) in parts {
            scores.extend(s);
            preds.extend(p);
        }
        Ok((scores, preds))
    }
}
