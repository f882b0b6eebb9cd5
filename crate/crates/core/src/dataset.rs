//! Labeled feature datasets, deterministic splits and the feature-table CSV format.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::matrix::Matrix;
use crate::rng::rng_for;
use crate::schema::{FeatureSchema, FeatureVector};

/// Samples sharing one feature schema, each with a unique id and a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    schema: FeatureSchema,
    ids: Vec<String>,
    features: Matrix,
    labels: Vec<ClassLabel>,
}

impl LabeledDataset {
    pub fn new(
        schema: FeatureSchema,
        ids: Vec<String>,
        features: Matrix,
        labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        if features.cols() != schema.len() {
            return Err(Error::Dimension(format!(
                "{} feature columns for a {}-slot schema",
                features.cols(),
                schema.len()
            )));
        }
        if ids.len() != features.rows() || labels.len() != features.rows() {
            return Err(Error::Dimension(format!(
                "{} ids, {} rows, {} labels",
                ids.len(),
                features.rows(),
                labels.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            let col = pos % schema.len().max(1);
            return Err(Error::NonFinite(schema.names()[col].clone()));
        }
        Ok(Self {
            schema,
            ids,
            features,
            labels,
        })
    }

    /// Build from `(id, vector, label)` triples; all vectors must carry `schema`'s hash.
    pub fn from_vectors(
        schema: FeatureSchema,
        samples: Vec<(String, FeatureVector, ClassLabel)>,
    ) -> Result<Self> {
        let mut ids = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        let mut data = Vec::with_capacity(samples.len() * schema.len());
        for (id, v, l) in samples {
            schema.ensure_same(v.schema_hash())?;
            data.extend_from_slice(v.values());
            ids.push(id);
            labels.push(l);
        }
        let features = Matrix::from_vec(ids.len(), schema.len(), data)?;
        Self::new(schema, ids, features, labels)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.index()).collect()
    }

    pub fn vector(&self, i: usize) -> FeatureVector {
        FeatureVector::new(self.features.row(i).to_vec(), &self.schema)
            .expect("dataset rows are finite and schema-sized")
    }

    /// Per-class tallies in canonical order.
    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut c = [0; ClassLabel::COUNT];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema: self.schema.clone(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Same samples with replacement feature values (same shape).
    pub fn with_features(&self, features: Matrix) -> Result<LabeledDataset> {
        if features.rows() != self.len() || features.cols() != self.schema.len() {
            return Err(Error::Dimension(format!(
                "replacement features are {}x{}, dataset is {}x{}",
                features.rows(),
                features.cols(),
                self.len(),
                self.schema.len()
            )));
        }
        Self::new(self.schema.clone(), self.ids.clone(), features, self.labels.clone())
    }

    /// Restrict to the given schema columns (which must be in increasing order).
    pub fn select_columns(&self, columns: &[usize]) -> Result<LabeledDataset> {
        let names: Vec<&str> = columns
            .iter()
            .map(|&c| {
                self.schema
                    .names()
                    .get(c)
                    .map(String::as_str)
                    .ok_or_else(|| Error::Dimension(format!("column {c} out of range")))
            })
            .collect::<Result<_>>()?;
        let schema = FeatureSchema::from_names(&names)?;
        Self::new(
            schema,
            self.ids.clone(),
            self.features.select_columns(columns),
            self.labels.clone(),
        )
    }

    /// Sample indices sorted by id; the canonical draw order for every split.
    fn id_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        order
    }

    /// Deterministic train/test split.
    ///
    /// Samples are drawn from id-sorted order so the result does not depend on
    /// ingestion order. In stratified mode the test size `round(n * fraction)`
    /// is shared across classes by largest remainder, so each class is within
    /// one sample of its exact proportion.
    pub fn split(
        &self,
        test_fraction: f64,
        seed: u64,
        stratified: bool,
    ) -> Result<(LabeledDataset, LabeledDataset)> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "test fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        if self.is_empty() {
            return Err(Error::EmptyData("cannot split an empty dataset".into()));
        }
        let order = self.id_order();
        let mut is_test = vec![false; self.len()];
        if stratified {
            self.check_strata(2)?;
            let quotas = proportional_quotas(&self.class_counts(), test_fraction);
            for class in ClassLabel::ALL {
                let mut members: Vec<usize> =
                    order.iter().copied().filter(|&i| self.labels[i] == class).collect();
                members.shuffle(&mut rng_for(seed, class.index() as u64));
                for &i in members.iter().take(quotas[class.index()]) {
                    is_test[i] = true;
                }
            }
        } else {
            let mut members = order.clone();
            members.shuffle(&mut rng_for(seed, u64::MAX));
            let n_test = (members.len() as f64 * test_fraction).round() as usize;
            for &i in members.iter().take(n_test) {
                is_test[i] = true;
            }
        }
        let train: Vec<usize> = order.iter().copied().filter(|&i| !is_test[i]).collect();
        let test: Vec<usize> = order.iter().copied().filter(|&i| is_test[i]).collect();
        Ok((self.subset(&train), self.subset(&test)))
    }

    /// Stratified fold assignment: `fold_of[i]` in `0..n_folds` for each sample.
    ///
    /// Each class is shuffled and dealt round-robin, so fold sizes per class
    /// differ by at most one.
    pub fn stratified_folds(&self, n_folds: usize, seed: u64) -> Result<Vec<usize>> {
        if n_folds < 2 {
            return Err(Error::InvalidParam(format!("need at least 2 folds, got {n_folds}")));
        }
        self.check_strata(n_folds)?;
        let order = self.id_order();
        let mut fold_of = vec![0; self.len()];
        for class in ClassLabel::ALL {
            let mut members: Vec<usize> =
                order.iter().copied().filter(|&i| self.labels[i] == class).collect();
            members.shuffle(&mut rng_for(seed, 0x_f01d_0000 + class.index() as u64));
            for (slot, i) in members.into_iter().enumerate() {
                fold_of[i] = slot % n_folds;
            }
        }
        Ok(fold_of)
    }

    fn check_strata(&self, needed: usize) -> Result<()> {
        for (i, &count) in self.class_counts().iter().enumerate() {
            if count > 0 && count < needed {
                return Err(Error::Stratification {
                    class: ClassLabel::ALL[i].name().into(),
                    count,
                    needed,
                });
            }
        }
        Ok(())
    }
}

/// Largest-remainder allocation of `round(total * fraction)` slots across classes.
///
/// Each class gets `floor(n_c * fraction)` or one more; leftover slots go to
/// the largest fractional parts, ties in canonical class order.
fn proportional_quotas(counts: &[usize; ClassLabel::COUNT], fraction: f64) -> [usize; ClassLabel::COUNT] {
    let total: usize = counts.iter().sum();
    let target = (total as f64 * fraction).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&n| n as f64 * fraction).collect();
    let mut quotas = [0; ClassLabel::COUNT];
    for (q, e) in quotas.iter_mut().zip(&exact) {
        *q = e.floor() as usize;
    }
    let mut by_remainder: Vec<usize> = (0..ClassLabel::COUNT).collect();
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = target.saturating_sub(quotas.iter().sum());
    for &c in by_remainder.iter().cycle().take(ClassLabel::COUNT * 2) {
        if left == 0 {
            break;
        }
        if quotas[c] < counts[c] {
            quotas[c] += 1;
            left -= 1;
        }
    }
    quotas
}

/// Feature table as stored on disk; labels are optional (prediction inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: FeatureSchema,
    pub ids: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<Option<ClassLabel>>,
}

impl FeatureTable {
    /// Requires every row to carry a label.
    pub fn into_labeled(self) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::Parse(format!("sample `{id}` has no label"))))
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(self.schema, self.ids, self.features, labels)
    }

    /// Reads `id,<feature names...>,label`; the label column may be absent or blank.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file)
    }

    pub fn read_from<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("id") {
            return Err(Error::Parse("feature table must start with an `id` column".into()));
        }
        let has_label = header.last().map(String::as_str) == Some("label");
        let feat_end = if has_label { header.len() - 1 } else { header.len() };
        let schema = FeatureSchema::from_names(&header[1..feat_end])?;
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, header has {}",
                    line + 2,
                    rec.len(),
                    header.len()
                )));
            }
            ids.push(rec[0].to_string());
            for (j, field) in rec.iter().enumerate().take(feat_end).skip(1) {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!("row {}: `{field}` in `{}` is not a number", line + 2, header[j]))
                })?;
                data.push(v);
            }
            labels.push(if has_label && !rec[feat_end].is_empty() {
                Some(rec[feat_end].parse()?)
            } else {
                None
            });
        }
        let features = Matrix::from_vec(ids.len(), schema.len(), data)?;
        Ok(Self {
            schema,
            ids,
            features,
            labels,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(file)
    }

    pub fn write_to<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.schema.names().iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(id.clone());
            rec.extend(self.features.row(i).iter().map(|v| v.to_string()));
            rec.push(self.labels[i].map(|l| l.name().to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature table>", e))?;
        Ok(())
    }
}

impl From<&LabeledDataset> for FeatureTable {
    fn from(ds: &LabeledDataset) -> Self {
        FeatureTable {
            schema: ds.schema.clone(),
            ids: ds.ids.clone(),
            features: ds.features.clone(),
            labels: ds.labels.iter().copied().map(Some).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(counts: [usize; 3]) -> LabeledDataset {
        let schema = FeatureSchema::from_names(&["skewness"]).unwrap();
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut vals = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                ids.push(format!("{c}-{i:03}"));
                labels.push(ClassLabel::ALL[c]);
                vals.push((c * 1000 + i) as f64);
            }
        }
        let m = Matrix::from_vec(vals.len(), 1, vals).unwrap();
        LabeledDataset::new(schema, ids, m, labels).unwrap()
    }

    #[test]
    fn stratified_proportions() {
        let ds = toy([76, 14, 10]);
        let (train, test) = ds.split(0.2, 42, true).unwrap();
        let c = test.class_counts();
        assert!((15..=16).contains(&c[0]), "{c:?}");
        assert!((2..=3).contains(&c[1]), "{c:?}");
        assert_eq!(c[2], 2);
        assert_eq!(train.len() + test.len(), 100);
        let train_ids: HashSet<_> = train.ids().iter().collect();
        assert!(test.ids().iter().all(|id| !train_ids.contains(id)));
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy([30, 10, 10]);
        let a = ds.split(0.3, 9, true).unwrap();
        let b = ds.split(0.3, 9, true).unwrap();
        assert_eq!(a.1.ids(), b.1.ids());
        let c = ds.split(0.3, 10, true).unwrap();
        assert_ne!(a.1.ids(), c.1.ids());
    }

    #[test]
    fn half_split_balanced_two_class() {
        let ds = toy([5, 5, 0]);
        let (train, test) = ds.split(0.5, 1, true).unwrap();
        assert_eq!(train.len(), 5);
        assert_eq!(test.len(), 5);
        // 2.5 each: the tied remainder goes to the first class in canonical order
        assert_eq!(test.class_counts(), [3, 2, 0]);
        assert_eq!(train.class_counts(), [2, 3, 0]);
    }

    #[test]
    fn quotas_largest_remainder() {
        assert_eq!(proportional_quotas(&[76, 14, 10], 0.2), [15, 3, 2]);
        assert_eq!(proportional_quotas(&[1099, 192, 149], 0.2), [220, 38, 30]);
        assert_eq!(proportional_quotas(&[0, 0, 0], 0.2), [0, 0, 0]);
    }

    #[test]
    fn stratification_needs_two_per_class() {
        let ds = toy([10, 1, 5]);
        assert!(matches!(ds.split(0.2, 0, true), Err(Error::Stratification { .. })));
        assert!(ds.split(0.2, 0, false).is_ok());
    }

    #[test]
    fn split_ignores_ingestion_order() {
        let ds = toy([20, 8, 6]);
        let mut rev: Vec<usize> = (0..ds.len()).collect();
        rev.reverse();
        let shuffled = ds.subset(&rev);
        let (_, a) = ds.split(0.25, 3, true).unwrap();
        let (_, b) = shuffled.split(0.25, 3, true).unwrap();
        assert_eq!(a.ids(), b.ids());
    }

    #[test]
    fn folds_are_balanced() {
        let ds = toy([23, 11, 7]);
        let folds = ds.stratified_folds(5, 4).unwrap();
        for class in 0..3 {
            let mut sizes = [0usize; 5];
            for (i, &f) in folds.iter().enumerate() {
                if ds.labels()[i].index() == class {
                    sizes[f] += 1;
                }
            }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "{sizes:?}");
        }
        assert!(matches!(toy([10, 3, 5]).stratified_folds(5, 0), Err(Error::Stratification { .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let schema = FeatureSchema::from_names(&["skewness"]).unwrap();
        let m = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let r = LabeledDataset::new(
            schema,
            vec!["a".into(), "a".into()],
            m,
            vec![ClassLabel::Circular; 2],
        );
        assert!(matches!(r, Err(Error::DuplicateId(_))));
    }

    #[test]
    fn csv_round_trip() {
        let ds = toy([3, 2, 2]);
        let mut buf = Vec::new();
        FeatureTable::from(&ds).write_to(&mut buf).unwrap();
        let back = FeatureTable::read_from(buf.as_slice()).unwrap().into_labeled().unwrap();
        assert_eq!(back, ds);
    }
}
