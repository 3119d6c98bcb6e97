//! CSV ingestion and export.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use isoguard_core::data::{ColumnData, ColumnKind, Dataset};

use crate::error::{Error, Result};

pub const DEFAULT_TARGET: &str = "class";

const NORMAL_NAMES: [&str; 2] = ["normal", "benign"];

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Name of the label column.
    pub target: String,
    /// Declared kinds; columns not listed are inferred.
    pub schema: Option<BTreeMap<String, ColumnKind>>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { target: DEFAULT_TARGET.to_string(), schema: None }
    }
}

/// Class labels as written in the source file, indexed by code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetLabels(pub [String; 2]);

/// Maps the two distinct target values onto 0 (normal) and 1 (anomaly).
///
/// A value spelled `normal` or `benign` (any case) is class 0; failing that,
/// the values `0` and `1` keep their meaning.
pub fn target_mapping(values: &BTreeSet<&str>) -> std::result::Result<TargetLabels, String> {
    let listed = || values.iter().copied().collect::<Vec<_>>().join(", ");
    if values.len() != 2 {
        return Err(format!("target must have exactly two distinct values, found {} ({})", values.len(), listed()));
    }
    let mut it = values.iter();
    let (a, b) = (*it.next().unwrap(), *it.next().unwrap());
    let is_normal = |v: &str| NORMAL_NAMES.iter().any(|n| v.eq_ignore_ascii_case(n));
    let pair = match (is_normal(a), is_normal(b)) {
        (true, false) => [a, b],
        (false, true) => [b, a],
        _ if (a, b) == ("0", "1") => [a, b],
        _ => return Err(format!("cannot tell which target value is the normal class among {}", listed())),
    };
    Ok(TargetLabels(pair.map(str::to_string)))
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a headed CSV file into a dataset with raw nominal strings.
pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<Dataset> {
    load_csv_labeled(path, opts).map(|(ds, _)| ds)
}

/// Like [`load_csv`], also returning the source spelling of both classes.
pub fn load_csv_labeled(path: &Path, opts: &LoadOptions) -> Result<(Dataset, TargetLabels)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::format(path, "missing header row"));
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::format(path, format!("duplicate column name {dup:?}")));
    }
    let target_idx = header
        .iter()
        .position(|h| *h == opts.target)
        .ok_or_else(|| Error::format(path, format!("unknown target column {:?}", opts.target)))?;
    if let Some(schema) = &opts.schema {
        if let Some(name) = schema.keys().find(|k| !header.contains(k)) {
            return Err(isoguard_core::Error::UnknownColumn(name.clone()).into());
        }
    }

    let width = header.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        // header is line 1
        let line = i + 2;
        if record.len() != width {
            return Err(Error::format(
                path,
                format!("line {line} has {} fields, expected {width}", record.len()),
            ));
        }
        for (c, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() {
                return Err(Error::format(path, format!("line {line}: missing value in column {:?}", header[c])));
            }
            cells[c].push(field.to_string());
        }
    }
    if cells[target_idx].is_empty() {
        return Err(isoguard_core::Error::Empty("dataset").into());
    }

    let distinct: BTreeSet<&str> = cells[target_idx].iter().map(String::as_str).collect();
    let labels = target_mapping(&distinct).map_err(|m| Error::format(path, m))?;
    let target: Vec<u8> = cells[target_idx].iter().map(|v| u8::from(*v != labels.0[0])).collect();

    let mut names = Vec::with_capacity(width - 1);
    let mut columns = Vec::with_capacity(width - 1);
    for (c, values) in cells.into_iter().enumerate() {
        if c == target_idx {
            continue;
        }
        let declared = opts.schema.as_ref().and_then(|s| s.get(&header[c])).copied();
        let numeric: Option<Vec<f64>> = values.iter().map(|v| parse_number(v)).collect();
        let column = match (declared, numeric) {
            (Some(ColumnKind::Nominal), _) | (None, None) => ColumnData::Nominal(values),
            (_, Some(v)) => ColumnData::Numeric(v),
            (Some(ColumnKind::Numeric), None) => {
                let bad = values.iter().find(|v| parse_number(v).is_none()).cloned().unwrap_or_default();
                return Err(isoguard_core::Error::NotNumeric(format!("{}: {bad:?}", header[c])).into());
            }
        };
        names.push(header[c].clone());
        columns.push(column);
    }
    Ok((Dataset::new(names, columns, target)?, labels))
}

/// Writes a dataset with its target under `target_name`, spelled with `labels`.
pub fn write_csv(path: &Path, ds: &Dataset, target_name: &str, labels: &TargetLabels) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header: Vec<&str> = ds.column_names().iter().map(String::as_str).collect();
    header.push(target_name);
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    let mut row = Vec::with_capacity(header.len());
    for r in 0..ds.n_rows() {
        row.clear();
        for col in ds.columns() {
            row.push(match col {
                ColumnData::Numeric(v) => v[r].to_string(),
                ColumnData::Nominal(v) => v[r].clone(),
            });
        }
        row.push(labels.0[ds.target()[r] as usize].clone());
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl Default for TargetLabels {
    fn default() -> Self {
        TargetLabels(["normal".to_string(), "anomaly".to_string()])
    }
}
