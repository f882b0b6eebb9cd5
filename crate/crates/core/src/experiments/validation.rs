use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::groups::specialist_spec;
use super::learner_config;
use super::report::{ExperimentReport, ReportRow, Timing};
use crate::dataset::LabeledDataset;
use crate::ensemble::{Combiner, EnsembleSpec, StackingSpec};
use crate::error::Result;
use crate::importance::distinct_columns;
use crate::learners::{LearnerConfig, LearnerKind};
use crate::model::{ModelSpec, TrainedModel};
use crate::schema::FeatureGroup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    /// Single learners reported as baselines.
    pub baselines: Vec<LearnerKind>,
    /// Ensemble rows; empty means the stacked RF-on-shape, ET-on-texture pair.
    pub ensembles: Vec<EnsembleSpec>,
    pub learners: Vec<LearnerConfig>,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            baselines: vec![LearnerKind::Rf, LearnerKind::Gb],
            ensembles: Vec::new(),
            learners: Vec::new(),
            seed: 42,
        }
    }
}

impl ValidationConfig {
    pub fn ensemble_specs(&self) -> Vec<EnsembleSpec> {
        if !self.ensembles.is_empty() {
            return self.ensembles.clone();
        }
        vec![specialist_spec(
            &[LearnerKind::Rf, LearnerKind::Et],
            &[FeatureGroup::Shape, FeatureGroup::Texture],
            Combiner::Stacking,
            &StackingSpec::default(),
            &self.learners,
        )]
    }
}

/// Score already-trained models on a dataset never used to fit them.
///
/// A schema mismatch between a model and the data is a hard error.
pub fn validate_models(models: &[(String, TrainedModel)], validation: &LabeledDataset, seed: u64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("exp5", "Validation on unseen data", "independent validation set", seed);
    for (label, model) in models {
        let start = Instant::now();
        let (cm, _) = model.evaluate(validation)?;
        report.timing.push(Timing::from_samples(format!("classify {} ({label})", validation.len()), &[start.elapsed().as_secs_f64()]));
        let mut row = ReportRow::from_matrix(label.clone(), cm, distinct_columns(model))?;
        if let ModelSpec::Ensemble(spec) = &model.hyperparameters {
            row = row.with_combiner(spec.combiner.name());
        }
        report.rows.push(row);
        report.notes.push(format!("{label}: standardizer {}", &model.standardizer.hash()[..12]));
    }
    Ok(report)
}

/// Train baselines and ensembles on `train`, then validate them on `validation`.
pub fn run_validation(train: &LabeledDataset, validation: &LabeledDataset, cfg: &ValidationConfig) -> Result<ExperimentReport> {
    train.schema().ensure_same(validation.schema().hash())?;
    let mut models = Vec::new();
    let mut timing = Vec::new();
    let specs = cfg
        .baselines
        .iter()
        .map(|&k| (k.name().to_string(), ModelSpec::Single(learner_config(k, &cfg.learners))))
        .chain(cfg.ensemble_specs().into_iter().map(|s| (s.label(), ModelSpec::Ensemble(s))));
    for (label, spec) in specs {
        let (fitted, t) = Timing::measure(format!("train {label}"), || TrainedModel::train(&spec, train, cfg.seed));
        models.push((label, fitted?.0));
        timing.push(t);
    }
    let mut report = validate_models(&models, validation, cfg.seed)?;
    timing.append(&mut report.timing);
    report.timing = timing;
    Ok(report)
}
