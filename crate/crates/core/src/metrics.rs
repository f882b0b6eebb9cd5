//! Evaluation metrics computed from confusion matrices.
//!
//! Everything here is a pure function of the matrix, so a metric computed
//! from a stored matrix always agrees with the one computed from the label
//! streams that produced it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::label::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub per_class: Vec<ClassScores>,
    pub macro_avg: f64,
    pub weighted: f64,
    pub micro: f64,
    /// Human-readable notes for zero denominators that were defined as 0.
    pub degenerate: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub f1_weighted: f64,
    pub f1_micro: f64,
    pub sds_score: f64,
    pub cba: f64,
    pub mcc: f64,
    pub per_class: Vec<ClassScores>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn class_name(k: usize, i: usize) -> String {
    match ClassLabel::from_index(i) {
        Some(l) if k == ClassLabel::COUNT => l.name().to_string(),
        _ => format!("class {i}"),
    }
}

fn non_empty(cm: &ConfusionMatrix) -> Result<()> {
    if cm.total() == 0 {
        return Err(Error::EmptyData("confusion matrix has no counts".into()));
    }
    Ok(())
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.trace() as f64, cm.total() as f64).unwrap_or(0.0)
}

/// Accuracy after merging every class except `normal_class` into one
/// abnormal class: confusions among abnormal classes count as correct.
pub fn sds_score(cm: &ConfusionMatrix, normal_class: usize) -> Result<f64> {
    let k = cm.k();
    if normal_class >= k {
        return Err(Error::InvalidParam(format!("normal class {normal_class} out of range for {k} classes")));
    }
    non_empty(cm)?;
    let abnormal: Vec<usize> = (0..k).filter(|&i| i != normal_class).collect();
    let merged = cm.merge_classes(&[vec![normal_class], abnormal])?;
    Ok(accuracy(&merged))
}

/// SDS with the canonical normal class (circular).
pub fn sds(cm: &ConfusionMatrix) -> Result<f64> {
    sds_score(cm, ClassLabel::Circular.index())
}

pub fn f1_scores(cm: &ConfusionMatrix) -> Result<F1Report> {
    non_empty(cm)?;
    let (rows, cols) = (cm.row_sums(), cm.col_sums());
    let total = cm.total() as f64;
    let k = cm.k();
    let mut degenerate = Vec::new();
    let per_class: Vec<ClassScores> = (0..k)
        .map(|i| {
            let tp = cm.get(i, i) as f64;
            let precision = ratio(tp, cols[i] as f64).unwrap_or_else(|| {
                degenerate.push(format!("precision undefined for {} (never predicted)", class_name(k, i)));
                0.0
            });
            let recall = ratio(tp, rows[i] as f64).unwrap_or_else(|| {
                degenerate.push(format!("recall undefined for {} (no true samples)", class_name(k, i)));
                0.0
            });
            let f1 = ratio(2.0 * precision * recall, precision + recall).unwrap_or(0.0);
            ClassScores { precision, recall, f1 }
        })
        .collect();
    let macro_avg = per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64;
    let weighted = per_class
        .iter()
        .zip(&rows)
        .map(|(c, &r)| c.f1 * r as f64)
        .sum::<f64>()
        / total;
    Ok(F1Report {
        per_class,
        macro_avg,
        weighted,
        micro: accuracy(cm),
        degenerate,
    })
}

/// Class balance accuracy: mean of `diag_i / max(row_i, col_i)`.
pub fn cba(cm: &ConfusionMatrix) -> f64 {
    let (rows, cols) = (cm.row_sums(), cm.col_sums());
    let k = cm.k();
    (0..k)
        .map(|i| ratio(cm.get(i, i) as f64, rows[i].max(cols[i]) as f64).unwrap_or(0.0))
        .sum::<f64>()
        / k as f64
}

/// Multiclass Matthews correlation (Gorodkin's R_K); 0 when undefined.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let c = cm.trace() as f64;
    let s = cm.total() as f64;
    let p: Vec<f64> = cm.col_sums().into_iter().map(|v| v as f64).collect();
    let t: Vec<f64> = cm.row_sums().into_iter().map(|v| v as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    ratio(c * s - pt, den).unwrap_or(0.0)
}

/// Every metric of a matrix, with the canonical normal class for SDS.
pub fn suite(cm: &ConfusionMatrix) -> Result<MetricSuite> {
    let f1 = f1_scores(cm)?;
    let mut degenerate = f1.degenerate;
    let m = mcc(cm);
    let (rows, cols) = (cm.row_sums(), cm.col_sums());
    let total = cm.total();
    if rows.iter().chain(&cols).any(|&v| v == total) {
        degenerate.push("mcc undefined (a single class absorbs every true or predicted label)".into());
    }
    Ok(MetricSuite {
        accuracy: accuracy(cm),
        f1_macro: f1.macro_avg,
        f1_weighted: f1.weighted,
        f1_micro: f1.micro,
        sds_score: sds(cm)?,
        cba: cba(cm),
        mcc: m,
        per_class: f1.per_class,
        degenerate,
    })
}

/// Percentage with two decimals, rounding halves up (`0.93825` → `93.83`).
pub fn format_percent(v: f64) -> String {
    // the nudge absorbs binary representation error at exact halves
    let hundredths = (v * 10_000.0 + 0.5 + 1e-7).floor();
    format!("{:.2}", hundredths / 100.0)
}

/// Scalar metrics addressable by name (permutation importance, rankings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Accuracy,
    F1Weighted,
    F1Macro,
    Sds,
    Cba,
    Mcc,
}

impl MetricId {
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Accuracy => "accuracy",
            MetricId::F1Weighted => "f1_weighted",
            MetricId::F1Macro => "f1_macro",
            MetricId::Sds => "sds",
            MetricId::Cba => "cba",
            MetricId::Mcc => "mcc",
        }
    }

    pub fn compute(self, cm: &ConfusionMatrix) -> Result<f64> {
        non_empty(cm)?;
        Ok(match self {
            MetricId::Accuracy => accuracy(cm),
            MetricId::F1Weighted => f1_scores(cm)?.weighted,
            MetricId::F1Macro => f1_scores(cm)?.macro_avg,
            MetricId::Sds => sds(cm)?,
            MetricId::Cba => cba(cm),
            MetricId::Mcc => mcc(cm),
        })
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "accuracy" | "acc" => Ok(MetricId::Accuracy),
            "f1" | "f1_weighted" => Ok(MetricId::F1Weighted),
            "f1_macro" => Ok(MetricId::F1Macro),
            "sds" | "sds_score" => Ok(MetricId::Sds),
            "cba" => Ok(MetricId::Cba),
            "mcc" => Ok(MetricId::Mcc),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn sds_examples() {
        let a = ConfusionMatrix::from_3x3([[1069, 4, 26], [0, 180, 12], [66, 7, 76]]);
        assert!((sds(&a).unwrap() - 1344.0 / 1440.0).abs() < 1e-12);
        let b = ConfusionMatrix::from_3x3([[1042, 5, 52], [16, 153, 23], [75, 3, 71]]);
        assert!((sds(&b).unwrap() - 1292.0 / 1440.0).abs() < 1e-12);
        assert_eq!(format_percent(sds(&b).unwrap()), "89.72");
        assert!(sds_score(&b, 3).is_err());
    }

    #[test]
    fn symmetric_confusion_f1() {
        let r = f1_scores(&cm(&[&[5, 5], &[5, 5]])).unwrap();
        for c in &r.per_class {
            assert_eq!((c.precision, c.recall, c.f1), (0.5, 0.5, 0.5));
        }
        assert_eq!((r.macro_avg, r.weighted, r.micro), (0.5, 0.5, 0.5));
    }

    #[test]
    fn cba_mcc_two_class() {
        let m = cm(&[&[8, 2], &[4, 6]]);
        assert!((cba(&m) - (8.0 / 12.0 + 6.0 / 10.0) / 2.0).abs() < 1e-12);
        assert!((mcc(&m) - 40.0 / 9600f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_uniform() {
        let p = ConfusionMatrix::from_3x3([[4, 0, 0], [0, 5, 0], [0, 0, 6]]);
        let s = suite(&p).unwrap();
        assert_eq!((s.accuracy, s.f1_weighted, s.f1_macro, s.cba, s.mcc, s.sds_score), (1.0, 1.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(mcc(&ConfusionMatrix::from_3x3([[3; 3]; 3])), 0.0);
    }

    #[test]
    fn constant_predictor() {
        let m = ConfusionMatrix::from_3x3([[1099, 0, 0], [192, 0, 0], [149, 0, 0]]);
        let s = suite(&m).unwrap();
        assert!((s.accuracy - 1099.0 / 1440.0).abs() < 1e-12);
        assert_eq!(s.accuracy, s.sds_score);
        assert_eq!(s.mcc, 0.0);
        assert!(!s.degenerate.is_empty());
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(suite(&ConfusionMatrix::zeros(3)).is_err());
    }

    #[test]
    fn percent_half_up() {
        assert_eq!(format_percent(0.93825), "93.83");
        assert_eq!(format_percent(0.938249), "93.82");
        assert_eq!(format_percent(1.0), "100.00");
        assert_eq!(format_percent(0.0), "0.00");
        assert_eq!(format_percent(759.0 / 809.0), "93.82");
    }

    #[test]
    fn metric_ids() {
        assert_eq!("SDS".parse::<MetricId>().unwrap(), MetricId::Sds);
        assert!(matches!("auc".parse::<MetricId>(), Err(Error::UnknownMetric(_))));
    }
}
