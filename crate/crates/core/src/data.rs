//! Tabular datasets, label encoding, standard scaling and train/test splits.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{check_binary, Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ColumnKind {
    Nominal,
    /// Integer and floating point source columns alike.
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Nominal(Vec<String>),
}

impl ColumnData {
    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Nominal(_) => ColumnKind::Nominal,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Nominal(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, indices: &[usize]) -> Self {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(indices.iter().map(|&i| v[i]).collect()),
            ColumnData::Nominal(v) => {
                ColumnData::Nominal(indices.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// Feature columns plus a binary target (0 = normal, 1 = anomaly).
///
/// Nominal columns hold their raw strings until a label encoder is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    column_names: Vec<String>,
    columns: Vec<ColumnData>,
    target: Vec<u8>,
}

impl Dataset {
    pub fn new(column_names: Vec<String>, columns: Vec<ColumnData>, target: Vec<u8>) -> Result<Self> {
        if column_names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: column_names.len(),
                right: columns.len(),
            });
        }
        if let Some(bad) = columns.iter().find(|c| c.len() != target.len()) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: target.len(),
            });
        }
        check_binary(&target)?;
        Ok(Self {
            column_names,
            columns,
            target,
        })
    }

    /// Dataset whose every feature column is numeric.
    pub fn from_matrix(column_names: Vec<String>, x: &Matrix, target: Vec<u8>) -> Result<Self> {
        x.check_width(column_names.len())?;
        let columns = (0..x.n_cols()).map(|c| ColumnData::Numeric(x.column(c))).collect();
        Self::new(column_names, columns, target)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(ColumnData::kind).collect()
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            column_names: self.column_names.clone(),
            columns: self.columns.iter().map(|c| c.select(indices)).collect(),
            target: indices.iter().map(|&i| self.target[i]).collect(),
        }
    }

    /// Feature matrix; fails if any column is still nominal.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let mut cols = Vec::with_capacity(self.columns.len());
        for (name, col) in self.column_names.iter().zip(&self.columns) {
            match col {
                ColumnData::Numeric(v) => cols.push(v.clone()),
                ColumnData::Nominal(_) => return Err(Error::NotNumeric(name.clone())),
            }
        }
        if cols.is_empty() {
            return Matrix::new(self.n_rows(), 0, Vec::new());
        }
        Matrix::from_columns(&cols)
    }
}

/// Lexicographically ordered categories of one nominal column; a category's
/// code is its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnEncoder {
    column: String,
    categories: Vec<String>,
}

impl ColumnEncoder {
    /// Takes categories ordered by code. They must be strictly increasing.
    pub fn new(column: String, categories: Vec<String>) -> Result<Self> {
        if categories.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "categories",
                alloc::format!("column {column:?}: categories must be unique and lexicographically ordered"),
            ));
        }
        Ok(Self { column, categories })
    }

    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn encode(&self, value: &str) -> Option<usize> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(value))
            .ok()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        self.categories.get(code).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EncoderState {
    columns: Vec<ColumnEncoder>,
}

impl EncoderState {
    pub fn from_columns(columns: Vec<ColumnEncoder>) -> Self {
        Self { columns }
    }

    pub fn columns(&self) -> &[ColumnEncoder] {
        &self.columns
    }

    pub fn get(&self, column: &str) -> Option<&ColumnEncoder> {
        self.columns.iter().find(|c| c.column == column)
    }
}

pub fn fit_label_encoder(ds: &Dataset) -> EncoderState {
    let columns = ds
        .column_names
        .iter()
        .zip(&ds.columns)
        .filter_map(|(name, col)| match col {
            ColumnData::Nominal(values) => {
                let mut cats: Vec<String> = values.clone();
                cats.sort_unstable();
                cats.dedup();
                Some(ColumnEncoder {
                    column: name.clone(),
                    categories: cats,
                })
            }
            ColumnData::Numeric(_) => None,
        })
        .collect();
    EncoderState { columns }
}

pub fn apply_label_encoder(ds: &Dataset, enc: &EncoderState) -> Result<Dataset> {
    for e in &enc.columns {
        match ds.column(&e.column) {
            Some(ColumnData::Nominal(_)) => {}
            Some(ColumnData::Numeric(_)) | None => return Err(Error::UnknownColumn(e.column.clone())),
        }
    }
    let mut columns = Vec::with_capacity(ds.columns.len());
    for (name, col) in ds.column_names.iter().zip(&ds.columns) {
        match col {
            ColumnData::Numeric(v) => columns.push(ColumnData::Numeric(v.clone())),
            ColumnData::Nominal(values) => {
                let e = enc.get(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
                let codes = values
                    .iter()
                    .map(|v| {
                        e.encode(v).map(|c| c as f64).ok_or_else(|| Error::UnseenCategory {
                            column: name.clone(),
                            value: v.clone(),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                columns.push(ColumnData::Numeric(codes));
            }
        }
    }
    Ok(Dataset {
        column_names: ds.column_names.clone(),
        columns,
        target: ds.target.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub column: String,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl ColumnStats {
    pub fn is_constant(&self) -> bool {
        self.std == 0.0
    }

    #[inline]
    pub fn scale(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalerState {
    columns: Vec<ColumnStats>,
}

impl ScalerState {
    pub fn from_columns(columns: Vec<ColumnStats>) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| !(c.std >= 0.0) || !c.mean.is_finite()) {
            return Err(Error::invalid(
                "scaler",
                alloc::format!("column {:?} has invalid statistics", bad.column),
            ));
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[ColumnStats] {
        &self.columns
    }

    pub fn get(&self, column: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.column == column)
    }

    pub fn constant_columns(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().filter(|c| c.is_constant()).map(|c| c.column.as_str())
    }
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

pub fn fit_scaler(ds: &Dataset) -> Result<ScalerState> {
    if ds.n_rows() == 0 {
        return Err(Error::Empty("dataset"));
    }
    let mut columns = Vec::with_capacity(ds.n_cols());
    for (name, col) in ds.column_names.iter().zip(&ds.columns) {
        let ColumnData::Numeric(values) = col else {
            return Err(Error::NotNumeric(name.clone()));
        };
        // An exactly constant column must report std 0 even when the mean
        // is inexact.
        let (mean, std) = if values.iter().all(|&v| v == values[0]) {
            (values[0], 0.0)
        } else {
            mean_and_std(values)
        };
        columns.push(ColumnStats {
            column: name.clone(),
            mean,
            std,
        });
    }
    Ok(ScalerState { columns })
}

pub fn apply_scaler(ds: &Dataset, sc: &ScalerState) -> Result<Dataset> {
    if ds.n_cols() != sc.columns.len() {
        return Err(Error::DimensionMismatch {
            expected: sc.columns.len(),
            actual: ds.n_cols(),
        });
    }
    let mut columns = Vec::with_capacity(ds.n_cols());
    for (name, col) in ds.column_names.iter().zip(&ds.columns) {
        let stats = sc.get(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        let ColumnData::Numeric(values) = col else {
            return Err(Error::NotNumeric(name.clone()));
        };
        columns.push(ColumnData::Numeric(values.iter().map(|&x| stats.scale(x)).collect()));
    }
    Ok(Dataset {
        column_names: ds.column_names.clone(),
        columns,
        target: ds.target.clone(),
    })
}

/// Fitted encoder and scaler, applied in that order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransformState {
    pub encoder: EncoderState,
    pub scaler: ScalerState,
}

impl TransformState {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let encoder = fit_label_encoder(train);
        let encoded = apply_label_encoder(train, &encoder)?;
        let scaler = fit_scaler(&encoded)?;
        Ok(Self { encoder, scaler })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        apply_scaler(&apply_label_encoder(ds, &self.encoder)?, &self.scaler)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid(
                "test_fraction",
                alloc::format!("{} is outside (0, 1)", self.test_fraction),
            ));
        }
        Ok(())
    }
}

fn test_count(n: usize, fraction: f64) -> usize {
    let k = libm::round(fraction * n as f64) as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Train and test row indices, each sorted ascending.
pub fn split_indices(target: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    check_binary(target)?;
    let n = target.len();
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::new();
    if spec.stratified {
        for class in 0..=1u8 {
            let mut rows: Vec<usize> = (0..n).filter(|&i| target[i] == class).collect();
            if rows.is_empty() {
                continue;
            }
            if rows.len() < 2 {
                return Err(Error::ClassTooSmall {
                    class,
                    count: rows.len(),
                });
            }
            let mut rng = rng::stream(spec.seed, tag::SPLIT, class as u64);
            rng::shuffle(&mut rng, &mut rows);
            let k = test_count(rows.len(), spec.test_fraction);
            test.extend_from_slice(&rows[..k]);
            train.extend_from_slice(&rows[k..]);
        }
    } else {
        if n < 2 {
            return Err(Error::invalid("dataset", "at least two rows are needed to split"));
        }
        let mut rows: Vec<usize> = (0..n).collect();
        let mut rng = rng::stream(spec.seed, tag::SPLIT, 2);
        rng::shuffle(&mut rng, &mut rows);
        let k = test_count(n, spec.test_fraction);
        test.extend_from_slice(&rows[..k]);
        train.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(&ds.target, spec)?;
    Ok((ds.select_rows(&train), ds.select_rows(&test)))
}

impl core::fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ColumnKind::Nominal => "nominal",
            ColumnKind::Numeric => "numeric",
        })
    }
}

/// Names as owned strings, for building datasets from literals.
pub fn names(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn nominal(values: &[&str]) -> ColumnData {
        ColumnData::Nominal(names(values))
    }

    fn protocol_dataset() -> Dataset {
        Dataset::new(
            names(&["duration", "protocol_type", "flag"]),
            vec![
                ColumnData::Numeric(vec![0.0, 2.0, 5.0, 1.0]),
                nominal(&["tcp", "udp", "icmp", "tcp"]),
                nominal(&["S0", "S0", "S0", "S0"]),
            ],
            vec![0, 1, 0, 1],
        )
        .unwrap()
    }

    #[test]
    fn categories_are_coded_lexicographically() {
        let enc = fit_label_encoder(&protocol_dataset());
        let proto = enc.get("protocol_type").unwrap();
        assert_eq!(proto.encode("icmp"), Some(0));
        assert_eq!(proto.encode("tcp"), Some(1));
        assert_eq!(proto.encode("udp"), Some(2));
        let flag = enc.get("flag").unwrap();
        assert_eq!(flag.categories(), &["S0".to_string()]);
        assert_eq!(flag.encode("S0"), Some(0));
    }

    #[test]
    fn encoder_decodes_what_it_encodes() {
        let enc = fit_label_encoder(&protocol_dataset());
        for col in enc.columns() {
            for cat in col.categories() {
                let code = col.encode(cat).unwrap();
                assert_eq!(col.decode(code), Some(cat.as_str()));
            }
        }
    }

    #[test]
    fn apply_encoder_maps_codes_per_column() {
        let ds = protocol_dataset();
        let enc = fit_label_encoder(&ds);
        let out = apply_label_encoder(&ds, &enc).unwrap();
        assert_eq!(out.column("protocol_type"), Some(&ColumnData::Numeric(vec![1.0, 2.0, 0.0, 1.0])));
        assert_eq!(out.column("flag"), Some(&ColumnData::Numeric(vec![0.0; 4])));
        assert_eq!(out.column("duration"), ds.column("duration"));
    }

    #[test]
    fn unseen_category_names_column_and_value() {
        let ds = protocol_dataset();
        let enc = fit_label_encoder(&ds);
        let other = Dataset::new(
            names(&["duration", "protocol_type", "flag"]),
            vec![ColumnData::Numeric(vec![1.0]), nominal(&["sctp"]), nominal(&["S0"])],
            vec![0],
        )
        .unwrap();
        let err = apply_label_encoder(&other, &enc).unwrap_err();
        assert_eq!(
            err,
            Error::UnseenCategory {
                column: "protocol_type".into(),
                value: "sctp".into()
            }
        );
        assert!(alloc::format!("{err}").contains("unseen category"));
    }

    #[test]
    fn numeric_only_dataset_passes_through_encoder() {
        let ds = Dataset::new(names(&["a"]), vec![ColumnData::Numeric(vec![1.0, 2.0])], vec![0, 1]).unwrap();
        let enc = fit_label_encoder(&ds);
        assert!(enc.columns().is_empty());
        assert_eq!(apply_label_encoder(&ds, &enc).unwrap(), ds);
    }

    fn numeric(cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|i| alloc::format!("c{i}")).collect();
        Dataset::new(
            names,
            cols.iter().map(|c| ColumnData::Numeric(c.to_vec())).collect(),
            vec![0; n],
        )
        .unwrap()
    }

    #[test]
    fn scaler_uses_population_statistics() {
        let sc = fit_scaler(&numeric(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]])).unwrap();
        let a = &sc.columns()[0];
        assert!((a.mean - 2.0).abs() < 1e-15);
        // sqrt(((1-2)^2 + 0 + (3-2)^2) / 3)
        assert!((a.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((a.std - 0.816_496_580_927_726).abs() < 1e-12);
        let b = &sc.columns()[1];
        assert_eq!((b.mean, b.std), (5.0, 0.0));
        assert!(b.is_constant());
        assert_eq!(sc.constant_columns().collect::<Vec<_>>(), vec!["c1"]);

        let sym = fit_scaler(&numeric(&[&[-1.0, 1.0]])).unwrap();
        assert_eq!((sym.columns()[0].mean, sym.columns()[0].std), (0.0, 1.0));
    }

    #[test]
    fn scaler_maps_constant_columns_to_zero() {
        let ds = numeric(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]]);
        let out = apply_scaler(&ds, &fit_scaler(&ds).unwrap()).unwrap();
        assert_eq!(out.column("c1"), Some(&ColumnData::Numeric(vec![0.0; 3])));
        let stats = ColumnStats {
            column: "x".into(),
            mean: 2.0,
            std: 1.0,
        };
        assert_eq!(stats.scale(3.0), 1.0);
    }

    #[test]
    fn scaler_rejects_empty_and_mismatched() {
        let empty = Dataset::new(names(&["a"]), vec![ColumnData::Numeric(vec![])], vec![]).unwrap();
        assert_eq!(fit_scaler(&empty), Err(Error::Empty("dataset")));
        let sc = fit_scaler(&numeric(&[&[1.0, 2.0]])).unwrap();
        assert!(apply_scaler(&numeric(&[&[1.0], &[2.0]]), &sc).is_err());
    }

    #[test]
    fn refitting_standardized_data_is_idempotent() {
        let ds = numeric(&[&[3.0, -1.0, 4.0, 1.5, 9.0], &[2.0, 7.0, 1.0, 8.0, 2.5]]);
        let once = apply_scaler(&ds, &fit_scaler(&ds).unwrap()).unwrap();
        let twice = apply_scaler(&once, &fit_scaler(&once).unwrap()).unwrap();
        let (a, b) = (once.to_matrix().unwrap(), twice.to_matrix().unwrap());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    fn labels(n0: usize, n1: usize) -> Dataset {
        let mut target = vec![0u8; n0];
        target.extend(core::iter::repeat_n(1, n1));
        let n = n0 + n1;
        numeric(&[&(0..n).map(|i| i as f64).collect::<Vec<_>>()]).with_target(target)
    }

    impl Dataset {
        fn with_target(mut self, target: Vec<u8>) -> Self {
            self.target = target;
            self
        }
    }

    #[test]
    fn split_counts_and_determinism() {
        let ds = labels(50, 50);
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 9,
            stratified: false,
        };
        let (train, test) = train_test_split(&ds, &spec).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (80, 20));
        let (tr2, te2) = train_test_split(&ds, &spec).unwrap();
        assert_eq!((train, test), (tr2, te2));
    }

    #[test]
    fn stratified_split_preserves_class_ratio() {
        // 90/10 classes at 20% test: 18 and 2 test rows, counted directly.
        let ds = labels(90, 10);
        for seed in 0..20 {
            let spec = SplitSpec {
                test_fraction: 0.2,
                seed,
                stratified: true,
            };
            let (train_idx, test_idx) = split_indices(ds.target(), &spec).unwrap();
            let t1 = test_idx.iter().filter(|&&i| ds.target()[i] == 1).count();
            let t0 = test_idx.len() - t1;
            assert!(t0.abs_diff(18) <= 1 && t1.abs_diff(2) <= 1, "{t0}/{t1}");
            let mut all: Vec<usize> = train_idx.iter().chain(&test_idx).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..100).collect::<Vec<_>>());
        }
    }

    #[test]
    fn stratified_split_needs_two_rows_per_class() {
        let ds = labels(10, 1);
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 1,
            stratified: true,
        };
        assert_eq!(
            split_indices(ds.target(), &spec),
            Err(Error::ClassTooSmall { class: 1, count: 1 })
        );
    }

    #[test]
    fn transform_state_fits_train_and_applies_to_test() {
        let ds = protocol_dataset();
        let ts = TransformState::fit(&ds).unwrap();
        let out = ts.apply(&ds).unwrap().to_matrix().unwrap();
        for c in 0..2 {
            let col = out.column(c);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-12);
        }
        assert_eq!(out.column(2), vec![0.0; 4]);
    }
}
