use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::Protocol;
use super::report::{ExperimentReport, ReportRow, Timing};
use super::learner_config;
use crate::dataset::LabeledDataset;
use crate::ensemble::{Combiner, EnsembleSpec, MemberSpec, Selector, StackingSpec, REPLICATION_SIZES};
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerKind};
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub pool: Vec<LearnerKind>,
    pub sizes: Vec<usize>,
    pub combiners: Vec<Combiner>,
    pub protocol: Protocol,
    pub stacking: StackingSpec,
    /// Hyperparameter overrides by kind; other kinds use their defaults.
    pub learners: Vec<LearnerConfig>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            pool: LearnerKind::POOL.to_vec(),
            sizes: REPLICATION_SIZES.collect(),
            combiners: vec![Combiner::HardVote, Combiner::Stacking],
            protocol: Protocol::default(),
            stacking: StackingSpec::default(),
            learners: Vec::new(),
            seed: 42,
        }
    }
}

/// Every size-`r` subset of `pool` for each requested `r`, in lexicographic
/// order of pool positions.
pub fn combinations(pool: &[LearnerKind], sizes: &[usize]) -> Result<Vec<Vec<LearnerKind>>> {
    if pool.iter().duplicates().next().is_some() {
        return Err(Error::InvalidParam("learner pool has duplicates".into()));
    }
    let mut out = Vec::new();
    for &r in sizes {
        if !REPLICATION_SIZES.contains(&r) || r > pool.len() {
            return Err(Error::InvalidParam(format!(
                "combination size {r} outside 2..=7 or larger than the pool of {}",
                pool.len()
            )));
        }
        out.extend(pool.iter().copied().combinations(r));
    }
    Ok(out)
}

/// Label such as `DT, SVM, kNN`.
pub fn combo_label(kinds: &[LearnerKind]) -> String {
    kinds.iter().map(|k| k.name()).join(", ")
}

/// Fit every combination with every combiner, evaluate, rank by SDS then F1.
/// Failures are recorded on their row and the sweep continues.
pub fn run_combination_sweep(data: &LabeledDataset, cfg: &SweepConfig) -> Result<ExperimentReport> {
    let combos = combinations(&cfg.pool, &cfg.sizes)?;
    if cfg.combiners.is_empty() {
        return Err(Error::InvalidParam("no combiner requested".into()));
    }
    let parts = cfg.protocol.partition(data, cfg.seed)?;
    let jobs: Vec<(&Vec<LearnerKind>, Combiner)> =
        combos.iter().flat_map(|c| cfg.combiners.iter().map(move |&k| (c, k))).collect();
    let n_features = data.schema().len();
    let (rows, timing) = Timing::measure("sweep", || {
        jobs.par_iter()
            .map(|&(kinds, combiner)| {
                let members = kinds
                    .iter()
                    .map(|&k| MemberSpec::new(learner_config(k, &cfg.learners), Selector::All))
                    .collect();
                let mut spec = EnsembleSpec::new(members, combiner);
                spec.stacking = cfg.stacking.clone();
                spec.replication = true;
                let cm = parts.evaluate(&ModelSpec::Ensemble(spec), cfg.seed);
                ReportRow::from_result(combo_label(kinds), n_features, cm).with_combiner(combiner.name())
            })
            .collect::<Vec<_>>()
    });
    let title = match cfg.combiners.as_slice() {
        [c] => format!("Combinations of {} to {} learners, {}", cfg.sizes.iter().min().unwrap_or(&0), cfg.sizes.iter().max().unwrap_or(&0), c.name()),
        _ => "Learner combinations".to_string(),
    };
    let mut report = ExperimentReport::new("exp1", title, parts.protocol.to_string(), cfg.seed);
    report.rows = rows;
    report.rank();
    report.timing.push(timing);
    Ok(report)
}
