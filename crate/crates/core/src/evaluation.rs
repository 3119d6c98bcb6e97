//! Confusion counts, precision/recall/accuracy/F1, ROC curves and the
//! before/after comparison table.
//!
//! The positive class is anomaly (label 1) throughout.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierKind;
use crate::error::{check_binary, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Counts with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    check_binary(y_true)?;
    check_binary(y_pred)?;
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            _ => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Metrics whose denominator was zero, reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricSet {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic_mean(p: f64, r: f64) -> (f64, bool) {
    if p + r == 0.0 {
        (0.0, true)
    } else {
        (2.0 * p * r / (p + r), false)
    }
}

pub fn metrics(c: &ConfusionCounts) -> Result<MetricSet> {
    if c.total() == 0 {
        return Err(Error::Empty("confusion counts"));
    }
    let (precision, dp) = ratio(c.tp, c.tp + c.fp);
    let (recall, dr) = ratio(c.tp, c.tp + c.fn_);
    let (accuracy, _) = ratio(c.tp + c.tn, c.total());
    let (f1, df) = harmonic_mean(precision, recall);
    Ok(MetricSet {
        precision,
        recall,
        accuracy,
        f1,
        degenerate: Degenerate {
            precision: dp,
            recall: dr,
            f1: df,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class scores plus their macro and support-weighted averages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AveragedMetrics {
    pub normal: ClassMetrics,
    pub anomaly: ClassMetrics,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
}

pub fn averaged_metrics(c: &ConfusionCounts) -> Result<AveragedMetrics> {
    let per_class = |c: &ConfusionCounts| -> Result<ClassMetrics> {
        let m = metrics(c)?;
        Ok(ClassMetrics {
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            support: c.tp + c.fn_,
        })
    };
    let anomaly = per_class(c)?;
    let normal = per_class(&c.swapped())?;
    let n = (anomaly.support + normal.support) as f64;
    let (wa, wn) = (anomaly.support as f64 / n, normal.support as f64 / n);
    Ok(AveragedMetrics {
        normal,
        anomaly,
        macro_avg: ClassMetrics {
            precision: 0.5 * (anomaly.precision + normal.precision),
            recall: 0.5 * (anomaly.recall + normal.recall),
            f1: 0.5 * (anomaly.f1 + normal.f1),
            support: c.total(),
        },
        weighted_avg: ClassMetrics {
            precision: wa * anomaly.precision + wn * normal.precision,
            recall: wa * anomaly.recall + wn * normal.recall,
            f1: wa * anomaly.f1 + wn * normal.f1,
            support: c.total(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RocPoint {
    /// Scores `≥ threshold` are called positive; the first point uses `+∞`.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Threshold sweep over every distinct score, highest first, with the area
/// computed by the trapezoidal rule.
pub fn roc(y_true: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    check_binary(y_true)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("score"));
    }
    let n_pos = y_true.iter().filter(|&&l| l == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut points = Vec::new();
    points.push(RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let point = RocPoint {
            threshold,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        };
        let prev = points.last().expect("starts with the origin");
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) * 0.5;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

/// One classifier evaluated on one test partition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelResult {
    pub model: ClassifierKind,
    pub confusion: ConfusionCounts,
    pub metrics: MetricSet,
    pub averages: AveragedMetrics,
    pub auc: f64,
}

pub fn evaluate_model(model: ClassifierKind, y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<(ModelResult, RocCurve)> {
    let confusion = confusion(y_true, y_pred)?;
    let curve = roc(y_true, scores)?;
    Ok((
        ModelResult {
            model,
            confusion,
            metrics: metrics(&confusion)?,
            averages: averaged_metrics(&confusion)?,
            auc: curve.auc,
        },
        curve,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricDelta {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ComparisonRow {
    pub model: ClassifierKind,
    pub before: ModelResult,
    pub after: ModelResult,
    /// `after - before`.
    pub delta: MetricDelta,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub outliers_removed: usize,
}

pub fn compare(before: &[ModelResult], after: &[ModelResult], outliers_removed: usize) -> Result<ComparisonReport> {
    let mut a: Vec<ClassifierKind> = before.iter().map(|r| r.model).collect();
    let mut b: Vec<ClassifierKind> = after.iter().map(|r| r.model).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b || a.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("classifiers", "both arms must evaluate the same distinct models"));
    }
    let rows = before
        .iter()
        .map(|x| {
            let y = after.iter().find(|r| r.model == x.model).expect("same model set");
            ComparisonRow {
                model: x.model,
                before: x.clone(),
                after: y.clone(),
                delta: MetricDelta {
                    accuracy: y.metrics.accuracy - x.metrics.accuracy,
                    precision: y.metrics.precision - x.metrics.precision,
                    recall: y.metrics.recall - x.metrics.recall,
                    f1: y.metrics.f1 - x.metrics.f1,
                    auc: y.auc - x.auc,
                },
            }
        })
        .collect();
    Ok(ComparisonReport {
        rows,
        outliers_removed,
    })
}

/// Integer percent, rounding halves up.
pub fn percent(x: f64) -> i64 {
    // the epsilon absorbs products such as 0.985 * 100 = 98.49999999999999
    libm::floor(x * 100.0 + 0.5 + 1e-9) as i64
}

/// Plain-text table with columns Dataset, model, Accuracy, Precision,
/// Recall and F1-score, all in integer percent.
pub fn render_table(report: &ComparisonReport) -> String {
    const ARMS: [&str; 2] = ["Original dataset", "Without Outlier"];
    let header = ["Dataset", "model", "Accuracy (%)", "Precision (%)", "Recall (%)", "F1-score (%)"];
    let mut lines: Vec<[String; 6]> = Vec::new();
    for (arm, label) in ARMS.iter().enumerate() {
        for (i, row) in report.rows.iter().enumerate() {
            let m = if arm == 0 { &row.before.metrics } else { &row.after.metrics };
            lines.push([
                if i == 0 { String::from(*label) } else { String::new() },
                String::from(row.model.abbreviation()),
                alloc::format!("{}", percent(m.accuracy)),
                alloc::format!("{}", percent(m.precision)),
                alloc::format!("{}", percent(m.recall)),
                alloc::format!("{}", percent(m.f1)),
            ]);
        }
    }
    let mut widths = header.map(str::len);
    for line in &lines {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let rule: String = {
        let mut s = String::from("+");
        for w in widths {
            s.push_str(&"-".repeat(w + 2));
            s.push('+');
        }
        s
    };
    let mut out = String::new();
    let push_row = |out: &mut String, cells: &[&str]| {
        out.push('|');
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            // text columns left aligned, numbers right aligned
            if i < 2 {
                let _ = write!(out, " {cell:<w$} |");
            } else {
                let _ = write!(out, " {cell:>w$} |");
            }
        }
        out.push('\n');
    };
    out.push_str(&rule);
    out.push('\n');
    push_row(&mut out, &header);
    out.push_str(&rule);
    out.push('\n');
    let per_arm = report.rows.len();
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<&str> = line.iter().map(String::as_str).collect();
        push_row(&mut out, &cells);
        if (i + 1) % per_arm.max(1) == 0 {
            out.push_str(&rule);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn confusion_enumerates_cases() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 1 });
        let same = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        let wrong = confusion(&[1, 0, 1], &[0, 1, 0]).unwrap();
        assert_eq!((wrong.tp, wrong.tn), (0, 0));
        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn metrics_on_worked_example() {
        // 9/(9+1), 9/(9+9), 90/100, 2*0.9*0.5/1.4
        let m = metrics(&ConfusionCounts { tp: 9, fp: 1, fn_: 9, tn: 81 }).unwrap();
        assert!((m.precision - 0.9).abs() < 1e-15);
        assert!((m.recall - 0.5).abs() < 1e-15);
        assert!((m.accuracy - 0.9).abs() < 1e-15);
        assert!((m.f1 - 9.0 / 14.0).abs() < 1e-15);
        assert!((m.f1 - 0.643).abs() < 1e-3);
    }

    #[test]
    fn equal_precision_and_recall_give_that_f1() {
        let m = metrics(&ConfusionCounts { tp: 3, fp: 1, fn_: 1, tn: 5 }).unwrap();
        assert_eq!(m.precision, m.recall);
        assert!((m.f1 - m.precision).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let m = metrics(&ConfusionCounts { tp: 0, fp: 0, fn_: 2, tn: 3 }).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate.precision && !m.degenerate.recall && m.degenerate.f1);
        assert_eq!(metrics(&ConfusionCounts::default()), Err(Error::Empty("confusion counts")));
    }

    #[test]
    fn averaged_metrics_cover_both_classes() {
        let c = ConfusionCounts { tp: 9, fp: 1, fn_: 9, tn: 81 };
        let a = averaged_metrics(&c).unwrap();
        assert_eq!((a.anomaly.support, a.normal.support), (18, 82));
        assert!((a.normal.precision - 81.0 / 90.0).abs() < 1e-15);
        assert!((a.normal.recall - 81.0 / 82.0).abs() < 1e-15);
        let w = 0.18 * a.anomaly.recall + 0.82 * a.normal.recall;
        assert!((a.weighted_avg.recall - w).abs() < 1e-15);
        // weighted recall is accuracy
        assert!((a.weighted_avg.recall - 0.9).abs() < 1e-12);
    }

    #[test]
    fn roc_extremes() {
        let perfect = roc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap();
        assert_eq!(perfect.auc, 1.0);
        let flat = roc(&[0, 1, 0, 1], &[0.3; 4]).unwrap();
        assert_eq!(flat.auc, 0.5);
        assert_eq!(flat.points.len(), 2);
        let first = perfect.points[0];
        let last = *perfect.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert_eq!(roc(&[1, 1], &[0.1, 0.2]), Err(Error::SingleClass));
    }

    fn result(model: ClassifierKind, tp: usize, tn: usize, fp: usize, fn_: usize) -> ModelResult {
        let c = ConfusionCounts { tp, tn, fp, fn_ };
        ModelResult {
            model,
            confusion: c,
            metrics: metrics(&c).unwrap(),
            averages: averaged_metrics(&c).unwrap(),
            auc: 0.9,
        }
    }

    #[test]
    fn identical_arms_have_zero_deltas() {
        let arm: Vec<ModelResult> = ClassifierKind::ALL
            .iter()
            .map(|&k| result(k, 40, 50, 5, 5))
            .collect();
        let r = compare(&arm, &arm, 0).unwrap();
        assert!(r.rows.iter().all(|row| row.delta == MetricDelta {
            accuracy: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            auc: 0.0
        }));
        assert!(compare(&arm, &arm[..4], 0).is_err());
    }

    #[test]
    fn table_reproduces_reported_accuracy_layout() {
        // Table 1 accuracies in percent: original then without outliers,
        // ordered KNN, SVM, NB, LR, ABC.
        let before = [99, 99, 90, 96, 99];
        let after = [100, 99, 95, 98, 100];
        let arm = |acc: [usize; 5]| -> Vec<ModelResult> {
            ClassifierKind::ALL
                .iter()
                .zip(acc)
                .map(|(&k, a)| result(k, a, 0, 100 - a, 0))
                .collect()
        };
        let report = compare(&arm(before), &arm(after), 12).unwrap();
        let deltas: Vec<i64> = report.rows.iter().map(|r| percent(r.delta.accuracy)).collect();
        assert_eq!(deltas, vec![1, 0, 5, 2, 1]);
        let table = render_table(&report);
        assert!(table.contains("| Dataset"));
        assert!(table.contains("F1-score (%)"));
        assert!(table.contains("Original dataset"));
        assert!(table.contains("Without Outlier"));
        let knn_rows: Vec<&str> = table.lines().filter(|l| l.contains(" KNN ")).collect();
        assert_eq!(knn_rows.len(), 2);
        assert!(knn_rows[0].contains(" 99 |") && knn_rows[1].contains(" 100 |"));
    }

    #[test]
    fn percent_rounds_half_up() {
        assert_eq!(percent(0.985), 99);
        assert_eq!(percent(0.994_9), 99);
        assert_eq!(percent(0.995), 100);
        assert_eq!(percent(0.5), 50);
    }
}
