//! JSON and CSV artifact formats shared by the stage subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use isoguard_core::data::{ColumnEncoder, ColumnStats, EncoderState, ScalerState, TransformState};
use isoguard_core::feature_selection::{Elimination, FeatureRanking, RfeResult};
use isoguard_core::isolation_forest::{AnomalyScore, OutlierVerdict, Verdict};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsEntry {
    pub mean: f64,
    pub std: f64,
}

/// `transforms.json`: category codes per nominal column and scaler statistics
/// per feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformsFile {
    pub encoders: BTreeMap<String, BTreeMap<String, usize>>,
    pub scaler: BTreeMap<String, StatsEntry>,
}

impl TransformsFile {
    pub fn from_state(state: &TransformState) -> Self {
        let encoders = state
            .encoder
            .columns()
            .iter()
            .map(|e| {
                let codes = e.categories().iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
                (e.column().to_string(), codes)
            })
            .collect();
        let scaler = state
            .scaler
            .columns()
            .iter()
            .map(|c| (c.column.clone(), StatsEntry { mean: c.mean, std: c.std }))
            .collect();
        Self { encoders, scaler }
    }

    pub fn to_state(&self, path: &Path) -> Result<TransformState> {
        let mut encoders = Vec::with_capacity(self.encoders.len());
        for (column, codes) in &self.encoders {
            let mut by_code: Vec<Option<&String>> = vec![None; codes.len()];
            for (cat, &code) in codes {
                match by_code.get_mut(code) {
                    Some(slot @ None) => *slot = Some(cat),
                    _ => return Err(Error::format(path, format!("column {column:?}: codes are not 0..{}", codes.len()))),
                }
            }
            let categories = by_code.into_iter().map(|c| c.expect("filled").clone()).collect();
            encoders.push(ColumnEncoder::new(column.clone(), categories)?);
        }
        let stats = self
            .scaler
            .iter()
            .map(|(column, s)| ColumnStats { column: column.clone(), mean: s.mean, std: s.std })
            .collect();
        Ok(TransformState {
            encoder: EncoderState::from_columns(encoders),
            scaler: ScalerState::from_columns(stats)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    /// Column position among the candidate features.
    pub index: usize,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationEntry {
    pub round: usize,
    pub name: String,
    pub removed: usize,
    pub importance: f64,
}

/// `rfe.json`: surviving columns, the elimination trace and the final ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeFile {
    /// All candidate feature columns, in dataset order.
    pub candidates: Vec<String>,
    /// Surviving column positions, ascending.
    pub selected: Vec<usize>,
    pub names: Vec<String>,
    pub trace: Vec<EliminationEntry>,
    /// Surviving columns by descending importance.
    pub ranking: Vec<RankedFeature>,
}

impl RfeFile {
    pub fn from_result(candidates: &[String], rfe: &RfeResult) -> Self {
        Self {
            candidates: candidates.to_vec(),
            selected: rfe.selected.clone(),
            names: rfe.selected.iter().map(|&i| candidates[i].clone()).collect(),
            trace: rfe
                .trace
                .iter()
                .map(|e| EliminationEntry {
                    round: e.round,
                    name: candidates[e.removed].clone(),
                    removed: e.removed,
                    importance: e.importance,
                })
                .collect(),
            ranking: rfe
                .ranking
                .order
                .iter()
                .map(|&p| RankedFeature {
                    name: candidates[rfe.selected[p]].clone(),
                    index: rfe.selected[p],
                    importance: rfe.ranking.importances[p],
                })
                .collect(),
        }
    }

    pub fn to_result(&self, path: &Path) -> Result<RfeResult> {
        let bad = |m: &str| Error::format(path, m.to_string());
        if self.selected.iter().any(|&i| i >= self.candidates.len()) || self.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("selected columns must be ascending positions among the candidates"));
        }
        let mut importances = vec![f64::NAN; self.selected.len()];
        for r in &self.ranking {
            let pos = self.selected.binary_search(&r.index).map_err(|_| bad("ranking names an unselected column"))?;
            importances[pos] = r.importance;
        }
        if importances.iter().any(|v| v.is_nan()) || self.ranking.len() != self.selected.len() {
            return Err(bad("ranking must list every selected column once"));
        }
        let ranking = FeatureRanking::from_importances(importances);
        let trace = self
            .trace
            .iter()
            .map(|e| Elimination { round: e.round, removed: e.removed, importance: e.importance })
            .collect();
        Ok(RfeResult { selected: self.selected.clone(), trace, ranking })
    }

    /// Selected column names by descending importance.
    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|r| r.name.as_str()).collect()
    }
}

/// `split.json`: the row indices of each partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub test_fraction: f64,
    pub stratified: bool,
    pub n_rows: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Writes `row,score,mean_path_length,verdict` for one partition.
pub fn write_verdicts(path: &Path, rows: &[usize], verdicts: &[OutlierVerdict]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["row", "score", "mean_path_length", "verdict"]).map_err(|e| Error::csv(path, e))?;
    for (row, v) in rows.iter().zip(verdicts) {
        w.write_record([
            row.to_string(),
            v.score.score.to_string(),
            v.score.mean_path_length.to_string(),
            v.verdict.label().to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_verdicts(path: &Path) -> Result<(Vec<usize>, Vec<OutlierVerdict>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::format(path, "short verdict record"));
        let num = |i: usize| -> Result<f64> {
            field(i)?.parse().map_err(|_| Error::format(path, format!("bad number {:?}", rec.get(i))))
        };
        rows.push(field(0)?.parse().map_err(|_| Error::format(path, "bad row index"))?);
        let label: i8 = field(3)?.parse().map_err(|_| Error::format(path, "bad verdict"))?;
        verdicts.push(OutlierVerdict {
            verdict: Verdict::from_label(label).ok_or_else(|| Error::format(path, "verdict must be 1 or -1"))?,
            score: AnomalyScore { score: num(1)?, mean_path_length: num(2)? },
        });
    }
    Ok((rows, verdicts))
}
