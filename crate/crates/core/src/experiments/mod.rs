//! Replication harness: combination sweeps, per-group training, specialist
//! ensembles, importance-driven retraining and cross-dataset validation.

pub mod fixtures;
mod groups;
mod plan;
mod protocol;
pub mod report;
mod sweep;
mod validation;

pub use groups::{
    best_per_group, group_grid, run_group_experiment, run_importance_experiment, run_specialist_experiment,
    specialist_spec, GroupResult, ImportanceExperimentConfig, SpecialistConfig,
};
pub use plan::{load_features, ExperimentId, ExperimentPlan};
pub use protocol::{Partitions, Protocol};
pub use report::{ExperimentReport, ReportRow, Timing};
pub use sweep::{combinations, combo_label, run_combination_sweep, SweepConfig};
pub use validation::{run_validation, validate_models, ValidationConfig};

use crate::learners::{LearnerConfig, LearnerKind};

/// The override for `kind` from `overrides`, or its default configuration.
pub fn learner_config(kind: LearnerKind, overrides: &[LearnerConfig]) -> LearnerConfig {
    overrides
        .iter()
        .find(|c| c.kind() == kind)
        .cloned()
        .unwrap_or_else(|| LearnerConfig::default_for(kind))
}
