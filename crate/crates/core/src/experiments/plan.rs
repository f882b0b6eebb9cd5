use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::groups::{run_group_experiment, run_importance_experiment, run_specialist_experiment, ImportanceExperimentConfig, SpecialistConfig};
use super::protocol::Protocol;
use super::report::ExperimentReport;
use super::sweep::{run_combination_sweep, SweepConfig};
use super::validation::{run_validation, validate_models, ValidationConfig};
use crate::dataset::{FeatureTable, LabeledDataset};
use crate::ensemble::{Combiner, EnsembleSpec, StackingSpec, REPLICATION_SIZES};
use crate::error::{Error, Result};
use crate::importance::SelectionConfig;
use crate::learners::{LearnerConfig, LearnerKind};
use crate::model::TrainedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Exp1Voting,
    Exp1Stacking,
    Exp2Groups,
    Exp3Specialists,
    Exp4Importance,
    Exp5Validation,
}

fn default_pool() -> Vec<LearnerKind> {
    LearnerKind::POOL.to_vec()
}

fn default_sizes() -> Vec<usize> {
    REPLICATION_SIZES.collect()
}

fn default_seed() -> u64 {
    42
}

/// A JSON experiment description. Relative paths resolve against the plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub id: ExperimentId,
    /// Feature CSV used for fitting (and evaluation, except in validation).
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
    #[serde(default = "default_pool")]
    pub pool: Vec<LearnerKind>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Hyperparameter overrides by kind.
    #[serde(default)]
    pub learners: Vec<LearnerConfig>,
    #[serde(default)]
    pub stacking: StackingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voting: Option<Combiner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specialists: Option<Vec<LearnerKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Vec<LearnerKind>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ensembles: Vec<EnsembleSpec>,
    /// Persisted models to validate instead of training baselines and ensembles.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<PathBuf>,
    /// Directory for the markdown, CSV and JSON reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Labelled feature CSV as a dataset.
pub fn load_features(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    FeatureTable::read_csv(path)?.into_labeled()
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentPlan {
    pub fn from_json(s: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(s)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        match self.id {
            ExperimentId::Exp1Voting | ExperimentId::Exp1Stacking => {
                if self.sizes.is_empty() || self.sizes.iter().any(|s| !REPLICATION_SIZES.contains(s)) {
                    return Err(Error::InvalidParam("combination sizes must lie in 2..=7".into()));
                }
            }
            ExperimentId::Exp5Validation if self.validation.is_none() => {
                return Err(Error::InvalidParam("validation needs a second dataset (`validation`)".into()));
            }
            _ => {}
        }
        if self.voting == Some(Combiner::Stacking) {
            return Err(Error::InvalidParam("`voting` must be hard_vote or soft_vote".into()));
        }
        Ok(())
    }

    /// Output directory resolved against `base`, if one is set.
    pub fn output_dir(&self, base: &Path) -> Option<PathBuf> {
        self.output.as_ref().map(|p| resolve(base, p))
    }

    pub fn run(&self, base: &Path) -> Result<ExperimentReport> {
        self.validate()?;
        let data = load_features(resolve(base, &self.train))?;
        let voting = self.voting.unwrap_or(Combiner::HardVote);
        let mut report = match self.id {
            ExperimentId::Exp1Voting | ExperimentId::Exp1Stacking => {
                let combiner = if self.id == ExperimentId::Exp1Voting { voting } else { Combiner::Stacking };
                let cfg = SweepConfig {
                    pool: self.pool.clone(),
                    sizes: self.sizes.clone(),
                    combiners: vec![combiner],
                    protocol: self.protocol,
                    stacking: self.stacking.clone(),
                    learners: self.learners.clone(),
                    seed: self.seed,
                };
                run_combination_sweep(&data, &cfg)?
            }
            ExperimentId::Exp2Groups => run_group_experiment(&data, &self.pool, self.protocol, &self.learners, self.seed)?,
            ExperimentId::Exp3Specialists => {
                let cfg = SpecialistConfig {
                    specialists: self.specialists.clone(),
                    pool: self.pool.clone(),
                    voting,
                    stacking: self.stacking.clone(),
                    protocol: self.protocol,
                    learners: self.learners.clone(),
                    seed: self.seed,
                };
                run_specialist_experiment(&data, &cfg)?
            }
            ExperimentId::Exp4Importance => {
                let mut cfg = ImportanceExperimentConfig {
                    stacking: self.stacking.clone(),
                    protocol: self.protocol,
                    learners: self.learners.clone(),
                    seed: self.seed,
                    ..Default::default()
                };
                if let Some(s) = &self.specialists {
                    cfg.specialists = s.clone();
                }
                if let Some(sel) = &self.selection {
                    cfg.selection = sel.clone();
                }
                run_importance_experiment(&data, &cfg)?
            }
            ExperimentId::Exp5Validation => {
                let path = self.validation.as_ref().expect("checked by validate");
                let validation = load_features(resolve(base, path))?;
                if self.models.is_empty() {
                    let mut cfg = ValidationConfig {
                        ensembles: self.ensembles.clone(),
                        learners: self.learners.clone(),
                        seed: self.seed,
                        ..Default::default()
                    };
                    if let Some(b) = &self.baselines {
                        cfg.baselines = b.clone();
                    }
                    run_validation(&data, &validation, &cfg)?
                } else {
                    let models = self
                        .models
                        .iter()
                        .map(|p| {
                            let m = TrainedModel::load(resolve(base, p))?;
                            let label = match &m.hyperparameters {
                                crate::model::ModelSpec::Ensemble(s) => s.label(),
                                crate::model::ModelSpec::Single(c) => c.kind().name().to_string(),
                            };
                            Ok((label, m))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    validate_models(&models, &validation, self.seed)?
                }
            }
        };
        report.id = serde_json::to_value(self.id)?.as_str().unwrap_or_default().to_string();
        Ok(report)
    }
}
