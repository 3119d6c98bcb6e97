//! Two-feature plot data with outlier verdicts.

use std::path::{Path, PathBuf};

use isoguard_core::data::{ColumnData, Dataset};
use isoguard_core::isolation_forest::Verdict;

use crate::error::{Error, Result};

pub const FULL_FILE: &str = "scatter_full.csv";
pub const CLEAN_FILE: &str = "scatter_clean.csv";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub verdict: Verdict,
    pub class: u8,
}

fn numeric<'a>(ds: &'a Dataset, name: &str) -> Result<&'a [f64]> {
    match ds.column(name) {
        Some(ColumnData::Numeric(v)) => Ok(v),
        Some(ColumnData::Nominal(_)) => Err(isoguard_core::Error::NotNumeric(name.to_string()).into()),
        None => Err(isoguard_core::Error::UnknownColumn(name.to_string()).into()),
    }
}

/// Points from columns `x_col` and `y_col` of a transformed dataset.
pub fn scatter_points(ds: &Dataset, verdicts: &[Verdict], x_col: &str, y_col: &str) -> Result<Vec<ScatterPoint>> {
    if verdicts.len() != ds.n_rows() {
        return Err(isoguard_core::Error::LengthMismatch { left: ds.n_rows(), right: verdicts.len() }.into());
    }
    let xs = numeric(ds, x_col)?;
    let ys = numeric(ds, y_col)?;
    Ok((0..ds.n_rows())
        .map(|i| ScatterPoint { x: xs[i], y: ys[i], verdict: verdicts[i], class: ds.target()[i] })
        .collect())
}

fn write_points<'a>(path: &Path, points: impl Iterator<Item = &'a ScatterPoint>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["x", "y", "verdict", "class"]).map_err(|e| Error::csv(path, e))?;
    for p in points {
        w.write_record([p.x.to_string(), p.y.to_string(), p.verdict.label().to_string(), p.class.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every point, and separately the points judged normal.
pub fn write_scatter(dir: &Path, points: &[ScatterPoint]) -> Result<(PathBuf, PathBuf)> {
    let full = dir.join(FULL_FILE);
    let clean = dir.join(CLEAN_FILE);
    write_points(&full, points.iter())?;
    write_points(&clean, points.iter().filter(|p| !p.verdict.is_outlier()))?;
    Ok((full, clean))
}
