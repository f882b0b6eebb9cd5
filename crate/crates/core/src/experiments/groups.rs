use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner_config;
use super::protocol::Protocol;
use super::report::{ExperimentReport, ReportRow, Timing};
use crate::dataset::LabeledDataset;
use crate::ensemble::{Combiner, EnsembleSpec, MemberSpec, Selector, StackingSpec};
use crate::error::{Error, Result};
use crate::importance::{select_and_retrain, SelectionConfig};
use crate::learners::{LearnerConfig, LearnerKind};
use crate::model::ModelSpec;
use crate::schema::FeatureGroup;

/// One (group, learner) cell of the per-group grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub group: FeatureGroup,
    pub kind: LearnerKind,
    pub row: ReportRow,
}

/// Every pool learner trained on each feature group alone.
pub fn group_grid(
    data: &LabeledDataset,
    pool: &[LearnerKind],
    protocol: Protocol,
    learners: &[LearnerConfig],
    seed: u64,
) -> Result<Vec<GroupResult>> {
    let mut sliced = Vec::new();
    for g in FeatureGroup::ALL {
        let cols = data.schema().group_columns(g);
        if cols.is_empty() {
            return Err(Error::Schema {
                expected: format!("{g} features"),
                found: "none in the dataset".into(),
            });
        }
        let d = data.select_columns(&cols)?;
        sliced.push((g, protocol.partition(&d, seed)?, cols.len()));
    }
    let jobs: Vec<(usize, LearnerKind)> = (0..sliced.len()).flat_map(|g| pool.iter().map(move |&k| (g, k))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(gi, kind)| {
            let (group, parts, width) = &sliced[gi];
            let spec = ModelSpec::Single(learner_config(kind, learners));
            let cm = parts.evaluate(&spec, seed);
            GroupResult {
                group: *group,
                kind,
                row: ReportRow::from_result(format!("{} ({group})", kind.name()), *width, cm),
            }
        })
        .collect())
}

/// Per-group grid as a report, grouped by feature group in registry order.
pub fn run_group_experiment(
    data: &LabeledDataset,
    pool: &[LearnerKind],
    protocol: Protocol,
    learners: &[LearnerConfig],
    seed: u64,
) -> Result<ExperimentReport> {
    let (grid, timing) = Timing::measure("group grid", || group_grid(data, pool, protocol, learners, seed));
    let mut report = ExperimentReport::new("exp2", "Learners trained on single feature groups", protocol.to_string(), seed);
    report.rows = grid?.into_iter().map(|g| g.row).collect();
    report.timing.push(timing);
    Ok(report)
}

/// Best learner of each group by SDS then F1; ties keep pool order.
pub fn best_per_group(grid: &[GroupResult]) -> Result<[LearnerKind; 3]> {
    let mut best = [None; 3];
    for (i, g) in FeatureGroup::ALL.iter().enumerate() {
        let mut cand: Vec<&GroupResult> = grid.iter().filter(|r| r.group == *g && r.row.error.is_none()).collect();
        cand.sort_by(|a, b| {
            let key = |r: &GroupResult| (r.row.sds.unwrap_or(f64::NEG_INFINITY), r.row.f1.unwrap_or(f64::NEG_INFINITY));
            let (ka, kb) = (key(a), key(b));
            kb.0.total_cmp(&ka.0).then(kb.1.total_cmp(&ka.1))
        });
        best[i] = cand.first().map(|r| r.kind);
    }
    match best {
        [Some(s), Some(t), Some(c)] => Ok([s, t, c]),
        _ => Err(Error::InvalidParam("a feature group has no successful learner".into())),
    }
}

/// Specialist ensemble: member `i` sees only group `groups[i]`.
pub fn specialist_spec(
    kinds: &[LearnerKind],
    groups: &[FeatureGroup],
    combiner: Combiner,
    stacking: &StackingSpec,
    learners: &[LearnerConfig],
) -> EnsembleSpec {
    let members = kinds
        .iter()
        .zip(groups)
        .map(|(&k, &g)| MemberSpec::new(learner_config(k, learners), Selector::group(g)))
        .collect();
    let mut spec = EnsembleSpec::new(members, combiner);
    spec.stacking = stacking.clone();
    spec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecialistConfig {
    /// Learners for shape, texture and color; `None` picks the best of each
    /// group from a per-group grid over `pool`.
    pub specialists: Option<Vec<LearnerKind>>,
    pub pool: Vec<LearnerKind>,
    pub voting: Combiner,
    pub stacking: StackingSpec,
    pub protocol: Protocol,
    pub learners: Vec<LearnerConfig>,
    pub seed: u64,
}

impl Default for SpecialistConfig {
    fn default() -> Self {
        Self {
            specialists: None,
            pool: LearnerKind::POOL.to_vec(),
            voting: Combiner::HardVote,
            stacking: StackingSpec::default(),
            protocol: Protocol::default(),
            learners: Vec::new(),
            seed: 42,
        }
    }
}

impl SpecialistConfig {
    pub fn resolve_specialists(&self, data: &LabeledDataset) -> Result<[LearnerKind; 3]> {
        match &self.specialists {
            Some(v) => <[LearnerKind; 3]>::try_from(v.as_slice())
                .map_err(|_| Error::InvalidParam(format!("need 3 specialists (shape, texture, color), got {}", v.len()))),
            None => best_per_group(&group_grid(data, &self.pool, self.protocol, &self.learners, self.seed)?),
        }
    }
}

/// Voting and stacking over three (shape, texture, color) and two (shape,
/// texture) specialists.
pub fn run_specialist_experiment(data: &LabeledDataset, cfg: &SpecialistConfig) -> Result<ExperimentReport> {
    if cfg.voting == Combiner::Stacking {
        return Err(Error::InvalidParam("voting combiner must be hard_vote or soft_vote".into()));
    }
    let kinds = cfg.resolve_specialists(data)?;
    let parts = cfg.protocol.partition(data, cfg.seed)?;
    let mut jobs = Vec::new();
    for size in [3, 2] {
        for combiner in [cfg.voting, Combiner::Stacking] {
            jobs.push(specialist_spec(&kinds[..size], &FeatureGroup::ALL[..size], combiner, &cfg.stacking, &cfg.learners));
        }
    }
    let (rows, timing) = Timing::measure("specialists", || {
        jobs.par_iter()
            .map(|spec| {
                let width: usize = FeatureGroup::ALL[..spec.members.len()]
                    .iter()
                    .map(|&g| data.schema().group_columns(g).len())
                    .sum();
                let cm = parts.evaluate(&ModelSpec::Ensemble(spec.clone()), cfg.seed);
                ReportRow::from_result(spec.label(), width, cm).with_combiner(spec.combiner.name())
            })
            .collect::<Vec<_>>()
    });
    let mut report = ExperimentReport::new("exp3", "Specialist ensembles", parts.protocol.to_string(), cfg.seed);
    report.rows = rows;
    report.timing.push(timing);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImportanceExperimentConfig {
    /// Shape and texture specialists; defaults to RF and ET.
    pub specialists: Vec<LearnerKind>,
    pub combiner: Combiner,
    pub stacking: StackingSpec,
    pub selection: SelectionConfig,
    pub protocol: Protocol,
    pub learners: Vec<LearnerConfig>,
    pub seed: u64,
}

impl Default for ImportanceExperimentConfig {
    fn default() -> Self {
        Self {
            specialists: vec![LearnerKind::Rf, LearnerKind::Et],
            combiner: Combiner::Stacking,
            stacking: StackingSpec::default(),
            selection: SelectionConfig {
                drop_color: true,
                ..SelectionConfig::default()
            },
            protocol: Protocol::default(),
            learners: Vec::new(),
            seed: 42,
        }
    }
}

/// Importance-driven selection on the first partition, full and reduced rows side by side.
pub fn run_importance_experiment(data: &LabeledDataset, cfg: &ImportanceExperimentConfig) -> Result<ExperimentReport> {
    let n = cfg.specialists.len();
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParam(format!("need 1 to 3 specialists, got {n}")));
    }
    let spec = specialist_spec(&cfg.specialists, &FeatureGroup::ALL[..n], cfg.combiner, &cfg.stacking, &cfg.learners);
    let parts = cfg.protocol.partition(data, cfg.seed)?;
    let (train, test) = &parts.folds[0];
    let (outcome, timing) = Timing::measure("select and retrain", || {
        select_and_retrain(&spec, train, test, &cfg.selection, cfg.seed)
    });
    let outcome = outcome?;
    let mut report = outcome.report;
    report.protocol = match parts.protocol {
        Protocol::Cv { n_folds } => format!("first fold of stratified {n_folds}-fold cv"),
        p => p.to_string(),
    };
    for g in FeatureGroup::ALL {
        let names: Vec<&str> = outcome
            .selected
            .iter()
            .filter(|n| data.schema().position(n).is_some_and(|p| data.schema().groups()[p] == g))
            .map(String::as_str)
            .collect();
        if !names.is_empty() {
            report.notes.push(format!("{g} ({}): {}", names.len(), names.join(", ")));
        }
    }
    report.timing.push(timing);
    Ok(report)
}
