//! Tabular experiment results with markdown, CSV and JSON renderings.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::features::registry;
use crate::metrics::{format_percent, suite, MetricSuite};
use crate::model::FORMAT_VERSION;

/// One configuration's outcome. Failed rows keep their label and the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combiner: Option<String>,
    pub n_features: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<MetricSuite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportRow {
    pub fn from_matrix(label: impl Into<String>, cm: ConfusionMatrix, n_features: usize) -> Result<Self> {
        let s = suite(&cm)?;
        Ok(Self {
            label: label.into(),
            combiner: None,
            n_features,
            f1: Some(s.f1_weighted),
            sds: Some(s.sds_score),
            suite: Some(s),
            confusion: Some(cm),
            error: None,
        })
    }

    pub fn failed(label: impl Into<String>, error: &Error, n_features: usize) -> Self {
        Self {
            label: label.into(),
            combiner: None,
            n_features,
            f1: None,
            sds: None,
            suite: None,
            confusion: None,
            error: Some(error.to_string()),
        }
    }

    pub fn with_combiner(mut self, combiner: impl Into<String>) -> Self {
        self.combiner = Some(combiner.into());
        self
    }

    /// Row from a fallible evaluation; errors become row-local failures.
    pub fn from_result(label: String, n_features: usize, r: Result<ConfusionMatrix>) -> Self {
        match r.and_then(|cm| Self::from_matrix(label.clone(), cm, n_features)) {
            Ok(row) => row,
            Err(e) => {
                log::warn!("{label}: {e}");
                Self::failed(label, &e, n_features)
            }
        }
    }

    /// True when the stored F1 and SDS agree with the stored matrix.
    pub fn consistent(&self) -> bool {
        match (&self.confusion, self.f1, self.sds) {
            (Some(cm), Some(f1), Some(sds)) => suite(cm)
                .map(|s| s.f1_weighted == f1 && s.sds_score == sds)
                .unwrap_or(false),
            (None, None, None) => self.error.is_some(),
            _ => false,
        }
    }
}

/// Wall-clock seconds for one phase over `repeats` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phase: String,
    pub mean_s: f64,
    pub std_s: f64,
    pub repeats: usize,
}

impl Timing {
    pub fn from_samples(phase: impl Into<String>, samples: &[f64]) -> Self {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        Self {
            phase: phase.into(),
            mean_s: mean,
            std_s: var.sqrt(),
            repeats: samples.len(),
        }
    }

    /// Time `f` once.
    pub fn measure<T>(phase: impl Into<String>, f: impl FnOnce() -> T) -> (T, Self) {
        let start = Instant::now();
        let out = f();
        (out, Self::from_samples(phase, &[start.elapsed().as_secs_f64()]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub title: String,
    /// Evaluation protocol, e.g. `holdout 0.2` or `5-fold cv`.
    pub protocol: String,
    pub seed: u64,
    pub schema_hash: String,
    pub format_version: u32,
    pub rows: Vec<ReportRow>,
    /// Free-form lines rendered under the table (e.g. selected features).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub timing: Vec<Timing>,
}

fn rank_key(a: &ReportRow, b: &ReportRow) -> Ordering {
    let key = |r: &ReportRow| (r.sds.unwrap_or(f64::NEG_INFINITY), r.f1.unwrap_or(f64::NEG_INFINITY));
    let (ka, kb) = (key(a), key(b));
    kb.0.total_cmp(&ka.0).then(kb.1.total_cmp(&ka.1))
}

impl ExperimentReport {
    pub fn new(id: impl Into<String>, title: impl Into<String>, protocol: impl Into<String>, seed: u64) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            protocol: protocol.into(),
            seed,
            schema_hash: registry().digest().to_string(),
            format_version: FORMAT_VERSION,
            rows: Vec::new(),
            notes: Vec::new(),
            timing: Vec::new(),
        }
    }

    /// Sort by SDS then weighted F1, both descending; failed rows last. Stable.
    pub fn rank(&mut self) {
        self.rows.sort_by(rank_key);
    }

    pub fn best(&self) -> Option<&ReportRow> {
        self.rows.iter().filter(|r| r.error.is_none()).min_by(|a, b| rank_key(a, b))
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}\n", self.title);
        let _ = writeln!(
            s,
            "protocol: {} | seed: {} | schema: {} | format: {}\n",
            self.protocol,
            self.seed,
            &self.schema_hash[..self.schema_hash.len().min(12)],
            self.format_version
        );
        let with_combiner = self.rows.iter().any(|r| r.combiner.is_some());
        if with_combiner {
            s.push_str("| Classifiers | Combiner | Features | F1 | SDS |\n|---|---|---|---|---|\n");
        } else {
            s.push_str("| Classifiers | Features | F1 | SDS |\n|---|---|---|---|\n");
        }
        for r in &self.rows {
            let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{}%", format_percent(v)));
            let label = match &r.error {
                Some(e) => format!("{} (failed: {e})", r.label),
                None => r.label.clone(),
            };
            if with_combiner {
                let _ = writeln!(
                    s,
                    "| {label} | {} | {} | {} | {} |",
                    r.combiner.as_deref().unwrap_or(""),
                    r.n_features,
                    pct(r.f1),
                    pct(r.sds)
                );
            } else {
                let _ = writeln!(s, "| {label} | {} | {} | {} |", r.n_features, pct(r.f1), pct(r.sds));
            }
        }
        if !self.notes.is_empty() {
            s.push('\n');
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
        }
        if !self.timing.is_empty() {
            s.push_str("\n| Phase | Mean (s) | Std (s) | Runs |\n|---|---|---|---|\n");
            for t in &self.timing {
                let _ = writeln!(s, "| {} | {:.4} | {:.4} | {} |", t.phase, t.mean_s, t.std_s, t.repeats);
            }
        }
        s
    }

    /// One line per row; the confusion matrix is flattened row-major.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "label", "combiner", "n_features", "f1", "sds", "accuracy", "f1_macro", "cba", "mcc", "confusion", "error",
        ])?;
        for r in &self.rows {
            let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let s = r.suite.as_ref();
            let cm = r
                .confusion
                .as_ref()
                .map(|cm| {
                    cm.counts()
                        .iter()
                        .flatten()
                        .map(u64::to_string)
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            w.write_record([
                r.label.clone(),
                r.combiner.clone().unwrap_or_default(),
                r.n_features.to_string(),
                num(r.f1),
                num(r.sds),
                num(s.map(|s| s.accuracy)),
                num(s.map(|s| s.f1_macro)),
                num(s.map(|s| s.cba)),
                num(s.map(|s| s.mcc)),
                cm,
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON without timing entries; identical plans and seeds give identical bytes.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timing.clear();
        copy.to_json()
    }

    /// Write `<stem>.md`, `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write_all(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("md", self.to_markdown()), ("csv", self.to_csv()?), ("json", self.to_json()?)] {
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: &str, cm: [[u64; 3]; 3]) -> ReportRow {
        ReportRow::from_matrix(label, ConfusionMatrix::from_3x3(cm), 121).unwrap()
    }

    #[test]
    fn ranking_and_rendering() {
        let mut r = ExperimentReport::new("t", "Test", "holdout 0.2", 7);
        r.rows.push(row("weak", [[5, 5, 0], [5, 5, 0], [0, 0, 10]]));
        r.rows.push(ReportRow::failed("broken", &Error::InvalidParam("x".into()), 121));
        r.rows.push(row("strong", [[10, 0, 0], [0, 9, 1], [0, 1, 9]]));
        r.rank();
        let labels: Vec<_> = r.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["strong", "weak", "broken"]);
        assert_eq!(r.best().unwrap().label, "strong");
        assert!(r.rows.iter().all(ReportRow::consistent));
        let md = r.to_markdown();
        assert!(md.contains("| strong | 121 | 93.33% | 100.00% |"), "{md}");
        assert_eq!(r.to_csv().unwrap().lines().count(), 4);
        let back: ExperimentReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
