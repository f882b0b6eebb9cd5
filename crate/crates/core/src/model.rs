//! Persisted models: a fitted learner or ensemble bundled with its feature
//! schema and the training-set standardizer.

use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionMatrix;
use crate::dataset::LabeledDataset;
use crate::ensemble::{fit_ensemble, EnsembleSpec, FittedEnsemble, FittedMember, Selector, StackingDiagnostics};
use crate::error::{Error, Result};
use crate::imaging::Standardizer;
use crate::label::ClassLabel;
use crate::learners::{argmax, Classifier, LearnerConfig, Proba};
use crate::matrix::Matrix;
use crate::metrics::{suite, MetricSuite};
use crate::schema::{FeatureSchema, FeatureVector};

/// Version of the JSON container written by [`TrainedModel::save`].
pub const FORMAT_VERSION: u32 = 1;

/// What to train: one learner on every slot, or an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Ensemble(EnsembleSpec),
    Single(LearnerConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelState {
    Single(FittedMember),
    Ensemble(FittedEnsemble),
}

impl ModelState {
    pub fn members(&self) -> &[FittedMember] {
        match self {
            ModelState::Single(m) => std::slice::from_ref(m),
            ModelState::Ensemble(e) => e.members(),
        }
    }
}

impl Classifier for ModelState {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        match self {
            ModelState::Single(m) => m.predict_full_row(x),
            ModelState::Ensemble(e) => e.predict_proba_row(x),
        }
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        match self {
            ModelState::Single(m) => argmax(&m.predict_full_row(x)),
            ModelState::Ensemble(e) => e.predict_row(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    /// RFC 3339 UTC; honours `SOURCE_DATE_EPOCH` for reproducible files.
    pub created: String,
    pub schema_hash: String,
    pub feature_names: Vec<String>,
    pub class_order: Vec<ClassLabel>,
    pub standardizer: Standardizer,
    /// Learner name for single models, combiner name for ensembles.
    pub learner_kind: String,
    pub hyperparameters: ModelSpec,
    pub seed: u64,
    pub state: ModelState,
}

/// Current time, or `SOURCE_DATE_EPOCH` when set.
pub fn creation_timestamp() -> String {
    let t = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map_or_else(SystemTime::now, |secs| UNIX_EPOCH + Duration::from_secs(secs));
    humantime::format_rfc3339_seconds(t).to_string()
}

impl TrainedModel {
    /// Standardize `train` with its own statistics, then fit `spec`.
    ///
    /// Stochastic single learners without an explicit seed use `seed`;
    /// ensemble members derive theirs from it.
    pub fn train(spec: &ModelSpec, train: &LabeledDataset, seed: u64) -> Result<(Self, Option<StackingDiagnostics>)> {
        if train.is_empty() {
            return Err(Error::EmptyData("no training samples".into()));
        }
        let standardizer = Standardizer::fit(train)?;
        let z = standardizer.apply_dataset(train)?;
        let (state, kind, diagnostics) = match spec {
            ModelSpec::Single(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed.get_or_insert(seed);
                let member = FittedMember::fit(&cfg, &Selector::All, &z, None, 0).map_err(|e| match e {
                    Error::Member { source, .. } => *source,
                    other => other,
                })?;
                (ModelState::Single(member), cfg.kind().name().to_string(), None)
            }
            ModelSpec::Ensemble(es) => {
                let (fitted, diag) = fit_ensemble(es, &z, seed)?;
                (ModelState::Ensemble(fitted), es.combiner.name().to_string(), diag)
            }
        };
        let schema = train.schema();
        Ok((
            Self {
                format_version: FORMAT_VERSION,
                created: creation_timestamp(),
                schema_hash: schema.hash().to_string(),
                feature_names: schema.names().to_vec(),
                class_order: ClassLabel::ALL.to_vec(),
                standardizer,
                learner_kind: kind,
                hyperparameters: spec.clone(),
                seed,
                state,
            },
            diagnostics,
        ))
    }

    pub fn schema(&self) -> &FeatureSchema {
        self.standardizer.schema()
    }

    fn check_schema(&self, hash: &str) -> Result<()> {
        if hash != self.schema_hash {
            return Err(Error::Schema {
                expected: self.schema_hash.clone(),
                found: hash.to_string(),
            });
        }
        Ok(())
    }

    pub fn predict_vector(&self, v: &FeatureVector) -> Result<(ClassLabel, Proba)> {
        self.check_schema(v.schema_hash())?;
        let z = self.standardizer.apply(v)?;
        let p = self.state.predict_proba_row(z.values());
        let k = self.state.predict_row(z.values());
        Ok((ClassLabel::ALL[k], p))
    }

    /// Labels and probability rows for raw feature rows laid out as `schema`.
    pub fn predict_matrix(&self, schema: &FeatureSchema, x: &Matrix) -> Result<(Vec<ClassLabel>, Vec<Proba>)> {
        self.check_schema(schema.hash())?;
        if x.cols() != schema.len() {
            return Err(Error::Dimension(format!("{} columns for a {}-slot schema", x.cols(), schema.len())));
        }
        let z = self.standardizer.apply_matrix(x);
        let proba = self.state.predict_proba(&z);
        let labels = (0..z.rows())
            .into_par_iter()
            .map(|i| ClassLabel::ALL[self.state.predict_row(z.row(i))])
            .collect();
        Ok((labels, proba))
    }

    pub fn predict_dataset(&self, ds: &LabeledDataset) -> Result<Vec<ClassLabel>> {
        Ok(self.predict_matrix(ds.schema(), ds.features())?.0)
    }

    /// Confusion matrix and metric suite on labelled data.
    pub fn evaluate(&self, test: &LabeledDataset) -> Result<(ConfusionMatrix, MetricSuite)> {
        if test.is_empty() {
            return Err(Error::EmptyData("no test samples".into()));
        }
        let predicted = self.predict_dataset(test)?;
        let cm = ConfusionMatrix::from_labels(test.labels(), &predicted)?;
        let s = suite(&cm)?;
        Ok((cm, s))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(s)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: header.format_version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_forms() {
        let single: ModelSpec = serde_json::from_str(r#"{"kind": "RF", "n_trees": 5, "seed": 3}"#).unwrap();
        assert!(matches!(single, ModelSpec::Single(_)));
        let ens: ModelSpec =
            serde_json::from_str(r#"{"members": [{"kind": "DT"}], "combiner": "hard_vote"}"#).unwrap();
        assert!(matches!(ens, ModelSpec::Ensemble(_)));
    }

    #[test]
    fn timestamp_from_epoch_variable() {
        assert_eq!(
            humantime::format_rfc3339_seconds(UNIX_EPOCH + Duration::from_secs(1_700_000_000)).to_string(),
            "2023-11-14T22:13:20Z"
        );
    }

    #[test]
    fn version_gate() {
        let err = TrainedModel::from_json(r#"{"format_version": 99}"#).unwrap_err();
        assert!(matches!(err, Error::FormatVersion { found: 99, supported: 1 }));
    }
}
