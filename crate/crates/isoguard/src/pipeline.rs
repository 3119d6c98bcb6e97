//! The staged experiment: ingest, select, detect, train, evaluate.
//!
//! Each stage runs on in-memory values and has a matching writer, so the
//! monolithic [`run_pipeline`] and the individual subcommands produce the
//! same artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use isoguard_core::classifiers::{ClassifierKind, ClassifierModel};
use isoguard_core::data::{split_indices, Dataset, TransformState};
use isoguard_core::evaluation::{compare, evaluate_model, render_table, ComparisonReport, ModelResult, RocCurve};
use isoguard_core::feature_selection::RfeResult;
use isoguard_core::isolation_forest::{verdicts, IsolationForest, OutlierVerdict, ThresholdSpec, Verdict};
use isoguard_core::Matrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ResolvedConfig, RESOLVED_FILE};
use crate::error::{Error, Result, StageContext};
use crate::formats::{read_json, read_verdicts, write_json, write_verdicts, RfeFile, SplitFile, TransformsFile};
use crate::parallel::Runtime;
use crate::scatter::{scatter_points, write_scatter};
use crate::tabular::load_csv;

pub const SPLIT_FILE: &str = "split.json";
pub const TRANSFORMS_FILE: &str = "transforms.json";
pub const RFE_FILE: &str = "rfe.json";
pub const FOREST_FILE: &str = "forest.json";
pub const TRAIN_VERDICTS_FILE: &str = "verdicts_train.csv";
pub const TEST_VERDICTS_FILE: &str = "verdicts_test.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

pub fn model_file(kind: ClassifierKind) -> String {
    format!("model_{}.json", kind.slug())
}

pub fn roc_file(kind: ClassifierKind) -> String {
    format!("roc_{}.csv", kind.slug())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a partition's feature values and labels, row by row.
pub fn partition_digest(x: &Matrix, y: &[u8]) -> String {
    let mut h = Sha256::new();
    for (row, label) in x.rows().zip(y) {
        for v in row {
            h.update(v.to_le_bytes());
        }
        h.update([*label]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Raw data, its split and the transforms fitted on the training rows.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub input_sha256: String,
    pub split: SplitFile,
    pub transforms: TransformState,
    /// Transformed training partition, every candidate feature.
    pub train: Dataset,
    pub test: Dataset,
}

fn load_raw(cfg: &ResolvedConfig) -> Result<(Dataset, String)> {
    let bytes = fs::read(&cfg.input).map_err(|e| Error::io(&cfg.input, e))?;
    let ds = load_csv(&cfg.input, &cfg.load_options())?;
    Ok((ds, sha256_hex(&bytes)))
}

fn apply_split(raw: &Dataset, split: &SplitFile, transforms: TransformState, input_sha256: String) -> Result<Prepared> {
    let train = transforms.apply(&raw.select_rows(&split.train))?;
    let test = transforms.apply(&raw.select_rows(&split.test))?;
    Ok(Prepared { input_sha256, split: split.clone(), transforms, train, test })
}

pub fn ingest(cfg: &ResolvedConfig) -> Result<Prepared> {
    let (raw, digest) = load_raw(cfg)?;
    let spec = cfg.split_spec();
    let (train, test) = split_indices(raw.target(), &spec)?;
    let split = SplitFile {
        seed: spec.seed,
        test_fraction: spec.test_fraction,
        stratified: spec.stratified,
        n_rows: raw.n_rows(),
        train,
        test,
    };
    let transforms = TransformState::fit(&raw.select_rows(&split.train))?;
    apply_split(&raw, &split, transforms, digest)
}

/// Rebuilds the ingest stage from `split.json` and `transforms.json`.
pub fn load_prepared(cfg: &ResolvedConfig, dir: &Path) -> Result<Prepared> {
    let (raw, digest) = load_raw(cfg)?;
    let split_path = dir.join(SPLIT_FILE);
    let split: SplitFile = read_json(&split_path)?;
    if split.n_rows != raw.n_rows() || split.train.iter().chain(&split.test).any(|&i| i >= raw.n_rows()) {
        return Err(Error::format(&split_path, "split does not match the input file"));
    }
    let tpath = dir.join(TRANSFORMS_FILE);
    let transforms = read_json::<TransformsFile>(&tpath)?.to_state(&tpath)?;
    apply_split(&raw, &split, transforms, digest)
}

pub fn write_prepared(dir: &Path, cfg: &ResolvedConfig, prep: &Prepared) -> Result<()> {
    write_json(&dir.join(RESOLVED_FILE), &cfg.to_config())?;
    write_json(&dir.join(SPLIT_FILE), &prep.split)?;
    write_json(&dir.join(TRANSFORMS_FILE), &TransformsFile::from_state(&prep.transforms))
}

pub fn select(rt: &Runtime, cfg: &ResolvedConfig, prep: &Prepared) -> Result<RfeResult> {
    let x = prep.train.to_matrix()?;
    rt.rfe(&x, prep.train.target(), cfg.config.feature_select.target_count, cfg.config.feature_select.step, &cfg.extra_trees())
}

pub fn write_selection(dir: &Path, prep: &Prepared, rfe: &RfeResult) -> Result<()> {
    write_json(&dir.join(RFE_FILE), &RfeFile::from_result(prep.train.column_names(), rfe))
}

pub fn load_selection(dir: &Path, prep: &Prepared) -> Result<RfeResult> {
    let path = dir.join(RFE_FILE);
    let file: RfeFile = read_json(&path)?;
    if file.candidates != prep.train.column_names() {
        return Err(Error::format(&path, "candidate columns differ from the input file"));
    }
    file.to_result(&path)
}

/// Selected-feature matrices of both partitions.
#[derive(Debug, Clone)]
pub struct Features {
    /// Selected column names in dataset order.
    pub names: Vec<String>,
    /// Selected column names by descending importance.
    pub ranked: Vec<String>,
    pub train_x: Matrix,
    pub train_y: Vec<u8>,
    pub test_x: Matrix,
    pub test_y: Vec<u8>,
}

pub fn features(prep: &Prepared, rfe: &RfeResult) -> Result<Features> {
    let names = prep.train.column_names();
    Ok(Features {
        names: rfe.selected.iter().map(|&i| names[i].clone()).collect(),
        ranked: rfe.ranked_selected().iter().map(|&i| names[i].clone()).collect(),
        train_x: prep.train.to_matrix()?.select_columns(&rfe.selected),
        train_y: prep.train.target().to_vec(),
        test_x: prep.test.to_matrix()?.select_columns(&rfe.selected),
        test_y: prep.test.target().to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub forest: IsolationForest,
    pub train: Vec<OutlierVerdict>,
    pub test: Vec<OutlierVerdict>,
    /// Score at or above which a row is an outlier.
    pub cutoff: f64,
}

impl Detection {
    pub fn train_outliers(&self) -> usize {
        self.train.iter().filter(|v| v.verdict.is_outlier()).count()
    }

    pub fn test_outliers(&self) -> usize {
        self.test.iter().filter(|v| v.verdict.is_outlier()).count()
    }
}

fn cutoff(threshold: ThresholdSpec, train: &[OutlierVerdict]) -> f64 {
    match threshold {
        ThresholdSpec::Fixed(tau) => tau,
        ThresholdSpec::Contamination(_) => train
            .iter()
            .filter(|v| v.verdict.is_outlier())
            .map(|v| v.score.score)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Fits the forest on the training rows. Test rows are judged against the
/// score cutoff that the threshold rule produced on the training rows.
pub fn detect(rt: &Runtime, cfg: &ResolvedConfig, feats: &Features) -> Result<Detection> {
    let forest = rt.fit_forest(&feats.train_x, &cfg.forest())?;
    let threshold = cfg.config.iforest.threshold;
    let train = verdicts(&rt.score_all(&forest, &feats.train_x)?, threshold)?;
    let cutoff = cutoff(threshold, &train);
    let test = verdicts(&rt.score_all(&forest, &feats.test_x)?, ThresholdSpec::Fixed(cutoff))?;
    Ok(Detection { forest, train, test, cutoff })
}

/// Axes for the scatter files: configured names, else the top-ranked features.
pub fn scatter_axes(cfg: &ResolvedConfig, feats: &Features) -> (String, String) {
    let first = feats.ranked[0].clone();
    let second = feats.ranked.get(1).cloned().unwrap_or_else(|| first.clone());
    (
        cfg.config.scatter.x_col.clone().unwrap_or(first),
        cfg.config.scatter.y_col.clone().unwrap_or(second),
    )
}

pub fn write_detection(dir: &Path, cfg: &ResolvedConfig, prep: &Prepared, feats: &Features, det: &Detection) -> Result<()> {
    write_json(&dir.join(FOREST_FILE), &det.forest)?;
    write_verdicts(&dir.join(TRAIN_VERDICTS_FILE), &prep.split.train, &det.train)?;
    write_verdicts(&dir.join(TEST_VERDICTS_FILE), &prep.split.test, &det.test)?;

    // scatter over every row, in source order
    let mut order: Vec<(usize, bool, usize)> = Vec::with_capacity(prep.split.n_rows);
    order.extend(prep.split.train.iter().enumerate().map(|(p, &r)| (r, true, p)));
    order.extend(prep.split.test.iter().enumerate().map(|(p, &r)| (r, false, p)));
    order.sort_unstable();
    let merged = merge_in_order(&prep.train, &prep.test, &order)?;
    let verdict_of: Vec<Verdict> = order
        .iter()
        .map(|&(_, is_train, p)| if is_train { det.train[p].verdict } else { det.test[p].verdict })
        .collect();
    let (x_col, y_col) = scatter_axes(cfg, feats);
    let points = scatter_points(&merged, &verdict_of, &x_col, &y_col)?;
    write_scatter(dir, &points)?;
    Ok(())
}

fn merge_in_order(train: &Dataset, test: &Dataset, order: &[(usize, bool, usize)]) -> Result<Dataset> {
    let tx = train.to_matrix()?;
    let sx = test.to_matrix()?;
    let mut data = Vec::with_capacity(order.len() * tx.n_cols());
    let mut target = Vec::with_capacity(order.len());
    for &(_, is_train, p) in order {
        let (m, t) = if is_train { (&tx, train.target()) } else { (&sx, test.target()) };
        data.extend_from_slice(m.row(p));
        target.push(t[p]);
    }
    let x = Matrix::new(order.len(), tx.n_cols(), data)?;
    Ok(Dataset::from_matrix(train.column_names().to_vec(), &x, target)?)
}

pub fn load_detection(dir: &Path, cfg: &ResolvedConfig, prep: &Prepared) -> Result<Detection> {
    let forest: IsolationForest = read_json(&dir.join(FOREST_FILE))?;
    let read = |name: &str, rows: &[usize]| -> Result<Vec<OutlierVerdict>> {
        let path = dir.join(name);
        let (r, v) = read_verdicts(&path)?;
        if r != rows {
            return Err(Error::format(&path, "rows differ from the split"));
        }
        Ok(v)
    };
    let train = read(TRAIN_VERDICTS_FILE, &prep.split.train)?;
    let test = read(TEST_VERDICTS_FILE, &prep.split.test)?;
    let cutoff = cutoff(cfg.config.iforest.threshold, &train);
    Ok(Detection { forest, train, test, cutoff })
}

/// Models of both arms, in [`ClassifierKind::ALL`] order.
#[derive(Debug, Clone)]
pub struct Trained {
    pub original: Vec<ClassifierModel>,
    pub cleaned: Vec<ClassifierModel>,
    /// Training positions kept in the cleaned arm.
    pub kept: Vec<usize>,
}

/// Training positions whose verdict is normal; fails if a class would vanish.
pub fn kept_rows(y: &[u8], det: &Detection) -> Result<Vec<usize>> {
    let kept: Vec<usize> = (0..y.len()).filter(|&i| !det.train[i].verdict.is_outlier()).collect();
    for class in 0..=1u8 {
        let before = y.iter().filter(|&&l| l == class).count();
        let remaining = kept.iter().filter(|&&i| y[i] == class).count();
        if remaining == 0 {
            return Err(Error::EmptiedClass { class, before, removed: before - remaining, remaining });
        }
    }
    Ok(kept)
}

pub fn train(rt: &Runtime, cfg: &ResolvedConfig, feats: &Features, det: &Detection) -> Result<Trained> {
    let configs = &cfg.config.classifiers;
    let original = rt.fit_classifiers(&ClassifierKind::ALL, &feats.train_x, &feats.train_y, configs).stage("train (original)")?;
    let kept = kept_rows(&feats.train_y, det).stage("train (without outlier)")?;
    let x = feats.train_x.select_rows(&kept);
    let y: Vec<u8> = kept.iter().map(|&i| feats.train_y[i]).collect();
    let cleaned = rt.fit_classifiers(&ClassifierKind::ALL, &x, &y, configs).stage("train (without outlier)")?;
    Ok(Trained { original, cleaned, kept })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: ClassifierKind,
    pub original: ClassifierModel,
    pub without_outlier: ClassifierModel,
}

pub fn write_models(dir: &Path, trained: &Trained) -> Result<()> {
    for ((kind, a), b) in ClassifierKind::ALL.iter().zip(&trained.original).zip(&trained.cleaned) {
        let file = ModelFile { model: *kind, original: a.clone(), without_outlier: b.clone() };
        write_json(&dir.join(model_file(*kind)), &file)?;
    }
    Ok(())
}

pub fn load_models(dir: &Path, feats: &Features, det: &Detection) -> Result<Trained> {
    let mut original = Vec::new();
    let mut cleaned = Vec::new();
    for kind in ClassifierKind::ALL {
        let path = dir.join(model_file(kind));
        let file: ModelFile = read_json(&path)?;
        if file.model != kind || file.original.kind() != kind || file.without_outlier.kind() != kind {
            return Err(Error::format(&path, format!("expected {} models", kind.slug())));
        }
        original.push(file.original);
        cleaned.push(file.without_outlier);
    }
    let kept = kept_rows(&feats.train_y, det)?;
    Ok(Trained { original, cleaned, kept })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    pub original: usize,
    pub without_outlier: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmDigests {
    pub original: String,
    pub without_outlier: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierCounts {
    pub train: usize,
    pub test: usize,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub input_sha256: String,
    pub n_rows: usize,
    pub n_candidate_features: usize,
    /// Selected features by descending importance.
    pub selected_features: Vec<String>,
    pub threshold: ThresholdSpec,
    /// `null` when no training row was flagged.
    pub score_cutoff: Option<f64>,
    pub outliers: OutlierCounts,
    pub train_rows: ArmCounts,
    pub test_rows: usize,
    pub test_partition_sha256: ArmDigests,
    pub comparison: ComparisonReport,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: PipelineReport,
    /// Per model: curves of the original and cleaned arms.
    pub curves: Vec<(ClassifierKind, RocCurve, RocCurve)>,
}

fn evaluate_arm(rt: &Runtime, models: &[ClassifierModel], x: &Matrix, y: &[u8]) -> Result<(Vec<ModelResult>, Vec<RocCurve>, String)> {
    let digest = partition_digest(x, y);
    let mut results = Vec::new();
    let mut curves = Vec::new();
    for model in models {
        let (scores, preds) = rt.score_model(model, x)?;
        let (r, c) = evaluate_model(model.kind(), y, &preds, &scores)?;
        results.push(r);
        curves.push(c);
    }
    Ok((results, curves, digest))
}

pub fn evaluate(rt: &Runtime, cfg: &ResolvedConfig, prep: &Prepared, feats: &Features, det: &Detection, trained: &Trained) -> Result<Evaluation> {
    let (before, curves_a, digest_a) = evaluate_arm(rt, &trained.original, &feats.test_x, &feats.test_y)?;
    let (after, curves_b, digest_b) = evaluate_arm(rt, &trained.cleaned, &feats.test_x, &feats.test_y)?;
    let removed = det.train_outliers();
    let comparison = compare(&before, &after, removed)?;
    let report = PipelineReport {
        seed: cfg.seed,
        input_sha256: prep.input_sha256.clone(),
        n_rows: prep.split.n_rows,
        n_candidate_features: prep.train.n_cols(),
        selected_features: feats.ranked.clone(),
        threshold: cfg.config.iforest.threshold,
        score_cutoff: det.cutoff.is_finite().then_some(det.cutoff),
        outliers: OutlierCounts { train: removed, test: det.test_outliers() },
        train_rows: ArmCounts { original: feats.train_y.len(), without_outlier: trained.kept.len() },
        test_rows: feats.test_y.len(),
        test_partition_sha256: ArmDigests { original: digest_a, without_outlier: digest_b },
        comparison,
    };
    let curves = ClassifierKind::ALL
        .iter()
        .zip(curves_a)
        .zip(curves_b)
        .map(|((k, a), b)| (*k, a, b))
        .collect();
    Ok(Evaluation { report, curves })
}

pub fn render_report(report: &PipelineReport) -> String {
    let mut out = render_table(&report.comparison);
    out.push_str(&format!(
        "\nseed: {}\nselected features ({}): {}\ntraining rows: {} original, {} without outliers ({} removed)\ntest rows: {} ({} flagged, kept in both arms)\n",
        report.seed,
        report.selected_features.len(),
        report.selected_features.join(", "),
        report.train_rows.original,
        report.train_rows.without_outlier,
        report.outliers.train,
        report.test_rows,
        report.outliers.test,
    ));
    out
}

fn write_roc(path: &Path, original: &RocCurve, cleaned: &RocCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["arm", "threshold", "fpr", "tpr"]).map_err(|e| Error::csv(path, e))?;
    for (arm, curve) in [("original", original), ("without_outlier", cleaned)] {
        for p in &curve.points {
            w.write_record([arm.to_string(), p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_evaluation(dir: &Path, eval: &Evaluation) -> Result<()> {
    write_json(&dir.join(REPORT_JSON), &eval.report)?;
    let txt = dir.join(REPORT_TXT);
    fs::write(&txt, render_report(&eval.report)).map_err(|e| Error::io(&txt, e))?;
    for (kind, a, b) in &eval.curves {
        write_roc(&dir.join(roc_file(*kind)), a, b)?;
    }
    Ok(())
}

pub fn create_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.to_path_buf())
}

/// Runs every stage and writes all artifacts into the configured output
/// directory.
pub fn run_pipeline(rt: &Runtime, cfg: &ResolvedConfig) -> Result<PipelineReport> {
    let dir = create_dir(&cfg.output)?;
    let prep = ingest(cfg).stage("ingest")?;
    write_prepared(&dir, cfg, &prep).stage("ingest")?;
    let rfe = select(rt, cfg, &prep).stage("select")?;
    write_selection(&dir, &prep, &rfe).stage("select")?;
    let feats = features(&prep, &rfe).stage("select")?;
    let det = detect(rt, cfg, &feats).stage("detect")?;
    write_detection(&dir, cfg, &prep, &feats, &det).stage("detect")?;
    let trained = train(rt, cfg, &feats, &det).stage("train")?;
    write_models(&dir, &trained).stage("train")?;
    let eval = evaluate(rt, cfg, &prep, &feats, &det, &trained).stage("evaluate")?;
    write_evaluation(&dir, &eval).stage("evaluate")?;
    Ok(eval.report)
}
