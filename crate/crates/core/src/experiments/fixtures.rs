//! Reference confusion matrices with their reported weighted F1 and SDS
//! (percent, two decimals), replayed through the metrics as a standalone check.

use serde::Serialize;

use super::report::{ExperimentReport, ReportRow};
use crate::confusion::ConfusionMatrix;
use crate::error::Result;
use crate::features::FEATURE_COUNT;
use crate::metrics::{f1_scores, sds};

/// SDS must reproduce the reference to this many percentage points.
pub const SDS_TOLERANCE_PP: f64 = 0.005;
/// Weighted F1 is expected within this many percentage points.
pub const F1_TOLERANCE_PP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fixture {
    pub experiment: &'static str,
    pub label: &'static str,
    pub matrix: [[u64; 3]; 3],
    pub f1_pct: f64,
    pub sds_pct: f64,
}

impl Fixture {
    pub fn confusion(&self) -> ConfusionMatrix {
        ConfusionMatrix::from_3x3(self.matrix)
    }

    /// `experiment/label`, unique across the table.
    pub fn key(&self) -> String {
        format!("{}/{}", self.experiment, self.label)
    }
}

const fn fx(experiment: &'static str, label: &'static str, matrix: [[u64; 3]; 3], f1_pct: f64, sds_pct: f64) -> Fixture {
    Fixture {
        experiment,
        label,
        matrix,
        f1_pct,
        sds_pct,
    }
}

#[rustfmt::skip]
pub const FIXTURES: [Fixture; 40] = [
    fx("exp1-voting", "MLP, RF", [[473, 16, 10], [4, 199, 7], [20, 6, 74]], 92.20, 93.82),
    fx("exp1-voting", "ET, MLP, GB", [[474, 15, 10], [4, 200, 6], [22, 8, 70]], 91.89, 93.70),
    fx("exp1-voting", "SVM, RF, kNN", [[483, 13, 3], [6, 197, 7], [29, 9, 62]], 91.42, 93.70),
    fx("exp1-voting", "DT, SVM, MLP, RF", [[478, 14, 7], [5, 199, 6], [25, 9, 66]], 91.66, 93.70),
    fx("exp1-voting", "DT, RF, GB, kNN", [[476, 16, 7], [5, 199, 6], [23, 9, 68]], 91.71, 93.70),
    fx("exp1-voting", "ET, SVM, MLP, GB, kNN", [[480, 14, 5], [5, 198, 7], [27, 10, 63]], 91.35, 93.70),
    fx("exp1-voting", "DT, MLP, RF, GB, kNN", [[478, 15, 6], [5, 198, 7], [25, 9, 66]], 91.54, 93.70),
    fx("exp1-voting", "ET, DT, SVM, MLP, GB", [[480, 13, 6], [5, 198, 7], [27, 7, 66]], 91.78, 93.70),
    fx("exp1-voting", "ET, DT, SVM, MLP, kNN", [[481, 13, 5], [5, 199, 6], [28, 7, 65]], 91.86, 93.70),
    fx("exp1-voting", "DT, SVM, MLP, RF, GB, kNN", [[481, 13, 5], [5, 199, 6], [27, 9, 64]], 91.72, 93.82),
    fx("exp1-voting", "DT, ET, GB, RF, SVM, kNN, MLP", [[477, 13, 9], [5, 199, 6], [27, 8, 65]], 91.41, 93.33),
    fx("exp1-stacking", "SVM, RF", [[476, 12, 11], [6, 195, 9], [21, 9, 70]], 91.55, 93.82),
    fx("exp1-stacking", "SVM, kNN", [[481, 11, 7], [7, 194, 9], [25, 9, 66]], 91.43, 93.82),
    fx("exp1-stacking", "DT, SVM, kNN", [[486, 7, 6], [8, 195, 7], [26, 7, 67]], 92.27, 94.19),
    fx("exp1-stacking", "DT, MLP, RF, GB", [[476, 12, 11], [5, 199, 6], [20, 9, 71]], 92.15, 94.07),
    fx("exp1-stacking", "DT, SVM, MLP, GB, kNN", [[480, 13, 6], [5, 199, 6], [24, 8, 68]], 92.18, 94.07),
    fx("exp1-stacking", "DT, SVM, MLP, RF, GB, kNN", [[477, 11, 11], [6, 198, 6], [22, 8, 70]], 92.01, 93.82),
    fx("exp1-stacking", "DT, ET, GB, RF, SVM, kNN, MLP", [[474, 12, 13], [7, 197, 6], [21, 9, 70]], 91.54, 93.45),
    fx("exp2-groups", "GB (shape)", [[486, 8, 5], [10, 198, 2], [23, 9, 68]], 92.75, 94.31),
    fx("exp2-groups", "RF (color)", [[461, 30, 8], [58, 144, 8], [47, 19, 34]], 77.70, 82.32),
    fx("exp3-voting-3", "GB_shape, MLP_texture, RF_color", [[495, 4, 0], [17, 191, 2], [31, 10, 59]], 91.25, 93.57),
    fx("exp3-voting-3", "GB_shape, ET_texture, RF_color", [[493, 6, 0], [11, 197, 2], [31, 10, 59]], 92.13, 94.07),
    fx("exp3-voting-3", "GB_shape, RF_texture, RF_color", [[490, 8, 1], [13, 196, 1], [27, 13, 60]], 91.81, 93.94),
    fx("exp3-voting-3", "GB_shape, RF_texture, ET_color", [[493, 6, 0], [16, 193, 1], [28, 12, 60]], 91.79, 93.82),
    fx("exp3-voting-2", "GB_shape, ET_texture", [[492, 7, 0], [11, 197, 2], [30, 9, 61]], 92.32, 94.07),
    fx("exp3-voting-2", "GB_shape, SVM_texture", [[490, 8, 1], [15, 193, 2], [26, 12, 62]], 91.37, 93.82),
    fx("exp3-stacking-3", "RF_shape, RF_texture, kNN_color", [[485, 9, 5], [8, 195, 7], [20, 7, 73]], 92.98, 94.81),
    fx("exp3-stacking-3", "RF_shape, DT_texture, kNN_color", [[487, 9, 3], [8, 196, 6], [21, 8, 71]], 93.06, 94.93),
    fx("exp3-stacking-3", "GB_shape, RF_texture, kNN_color", [[488, 8, 3], [11, 197, 2], [21, 8, 71]], 92.28, 94.68),
    fx("exp3-stacking-3", "RF_shape, MLP_texture, kNN_color", [[487, 10, 2], [8, 196, 6], [23, 8, 69]], 92.77, 94.68),
    fx("exp3-stacking-2", "RF_shape, ET_texture", [[487, 8, 4], [7, 196, 7], [19, 8, 73]], 93.35, 95.30),
    fx("exp3-stacking-2", "RF_shape, RF_texture", [[485, 8, 6], [7, 195, 8], [18, 8, 74]], 93.14, 95.18),
    fx("exp3-stacking-2", "RF_shape, SVM_texture", [[485, 9, 5], [8, 194, 8], [19, 9, 72]], 92.73, 94.93),
    fx("exp4-selected", "RF_shape, ET_texture", [[488, 7, 4], [7, 195, 8], [20, 7, 73]], 93.35, 95.30),
    fx("exp4-selected", "RF_shape, SVM_texture", [[487, 7, 5], [8, 194, 8], [18, 9, 73]], 93.11, 95.30),
    fx("exp4-selected", "RF_shape, RF_texture", [[488, 8, 3], [8, 195, 7], [19, 7, 74]], 93.47, 95.30),
    fx("exp4-selected", "RF_shape, GB_texture", [[487, 9, 3], [7, 195, 8], [20, 8, 72]], 93.08, 95.18),
    fx("exp5-validation", "RF", [[1042, 5, 52], [16, 153, 23], [75, 3, 71]], 86.20, 89.72),
    fx("exp5-validation", "GB", [[1035, 4, 60], [15, 167, 10], [72, 5, 72]], 87.32, 89.51),
    fx("exp5-validation", "RF_shape, ET_texture", [[1069, 4, 26], [0, 180, 12], [66, 7, 76]], 90.71, 93.33),
];

pub fn find(experiment: &str, label: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.experiment == experiment && f.label == label)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureCheck {
    pub key: String,
    pub sds_pct: f64,
    pub sds_reference: f64,
    pub f1_pct: f64,
    pub f1_reference: f64,
}

impl FixtureCheck {
    pub fn sds_ok(&self) -> bool {
        (self.sds_pct - self.sds_reference).abs() <= SDS_TOLERANCE_PP
    }

    pub fn f1_delta(&self) -> f64 {
        self.f1_pct - self.f1_reference
    }

    pub fn f1_ok(&self) -> bool {
        self.f1_delta().abs() <= F1_TOLERANCE_PP
    }
}

pub fn check(f: &Fixture) -> Result<FixtureCheck> {
    let cm = f.confusion();
    Ok(FixtureCheck {
        key: f.key(),
        sds_pct: 100.0 * sds(&cm)?,
        sds_reference: f.sds_pct,
        f1_pct: 100.0 * f1_scores(&cm)?.weighted,
        f1_reference: f.f1_pct,
    })
}

pub fn check_all() -> Result<Vec<FixtureCheck>> {
    FIXTURES.iter().map(check).collect()
}

/// Every fixture as a report row, in table order.
pub fn replay_report() -> Result<ExperimentReport> {
    let mut r = ExperimentReport::new("fixtures", "Reference matrix replay", "stored matrices", 0);
    for f in &FIXTURES {
        r.rows.push(ReportRow::from_matrix(f.key(), f.confusion(), FEATURE_COUNT)?);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_unique() {
        let mut keys: Vec<String> = FIXTURES.iter().map(Fixture::key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), FIXTURES.len());
    }

    #[test]
    fn every_sds_reproduces() {
        for c in check_all().unwrap() {
            assert!(c.sds_ok(), "{}: {} vs {}", c.key, c.sds_pct, c.sds_reference);
        }
    }
}
