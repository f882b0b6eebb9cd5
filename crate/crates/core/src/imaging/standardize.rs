use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::schema::{FeatureSchema, FeatureVector};

/// Standard deviations below this are treated as zero and replaced by 1.
const DEGENERATE_STD: f64 = 1e-12;

/// Slot-wise `(x - mean) / std` with training-set statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    schema: FeatureSchema,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    /// Population statistics of `train`; degenerate slots get std 1.
    pub fn fit(train: &LabeledDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyData("cannot fit a standardizer on no samples".into()));
        }
        let (means, stds) = train.features().column_moments();
        let stds = stds
            .into_iter()
            .map(|s| if s < DEGENERATE_STD { 1.0 } else { s })
            .collect();
        Ok(Self {
            schema: train.schema().clone(),
            means,
            stds,
        })
    }

    /// Identity transform, for models trained on raw features.
    pub fn identity(schema: &FeatureSchema) -> Self {
        Self {
            schema: schema.clone(),
            means: vec![0.0; schema.len()],
            stds: vec![1.0; schema.len()],
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.schema.ensure_same(v.schema_hash())?;
        FeatureVector::new(self.transform_row(v.values()), &self.schema)
    }

    pub fn inverse(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.schema.ensure_same(v.schema_hash())?;
        let values = v
            .values()
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| x * s + m)
            .collect();
        FeatureVector::new(values, &self.schema)
    }

    pub fn apply_dataset(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        self.schema.ensure_same(ds.schema().hash())?;
        ds.with_features(self.apply_matrix(ds.features()))
    }

    /// Row-wise transform of a matrix whose columns follow this schema.
    pub fn apply_matrix(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..out.rows() {
            let row = self.transform_row(m.row(i));
            out.row_mut(i).copy_from_slice(&row);
        }
        out
    }

    fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Provenance digest over schema and statistics (bit-exact).
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema.hash().as_bytes());
        for v in self.means.iter().chain(&self.stds) {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::ClassLabel;

    fn ds(schema: &FeatureSchema, rows: &[&[f64]]) -> LabeledDataset {
        let n = rows.len();
        LabeledDataset::new(
            schema.clone(),
            (0..n).map(|i| format!("s{i}")).collect(),
            Matrix::from_rows(rows).unwrap(),
            vec![ClassLabel::Circular; n],
        )
        .unwrap()
    }

    #[test]
    fn two_point_case() {
        let schema = FeatureSchema::from_names(&["area"]).unwrap();
        let z = Standardizer::fit(&ds(&schema, &[&[0.0], &[2.0]])).unwrap();
        assert_eq!(z.means(), &[1.0]);
        assert_eq!(z.stds(), &[1.0]);
        let v = FeatureVector::new(vec![5.0], &schema).unwrap();
        assert_eq!(z.apply(&v).unwrap().values(), &[4.0]);
        let t = z.apply_dataset(&ds(&schema, &[&[0.0], &[2.0]])).unwrap();
        assert_eq!(t.features().column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_slot_maps_to_zero() {
        let schema = FeatureSchema::from_names(&["area", "perimeter"]).unwrap();
        let d = ds(&schema, &[&[3.0, 1.0], &[3.0, 2.0], &[3.0, 6.0]]);
        let z = Standardizer::fit(&d).unwrap();
        assert_eq!(z.stds()[0], 1.0);
        let t = z.apply_dataset(&d).unwrap();
        assert!(t.features().column(0).iter().all(|&v| v == 0.0));
        let (m, s) = t.features().column_moments();
        assert!(m[1].abs() < 1e-9 && (s[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let a = FeatureSchema::from_names(&["area"]).unwrap();
        let b = FeatureSchema::from_names(&["perimeter"]).unwrap();
        let z = Standardizer::fit(&ds(&a, &[&[1.0], &[2.0]])).unwrap();
        let v = FeatureVector::new(vec![1.0], &b).unwrap();
        assert!(matches!(z.apply(&v), Err(Error::Schema { .. })));
    }
}
