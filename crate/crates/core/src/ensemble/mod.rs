//! Voting and stacked-generalization ensembles over base learners, each
//! member optionally restricted to a slice of the feature schema.

mod stacking;
mod voting;

pub use stacking::{fit_stacking, MetaInput, Stacking, StackingDiagnostics, StackingSpec};
pub use voting::{fit_voting, Voting};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::learners::{fit, Classifier, FittedLearner, LearnerConfig, LearnerKind, Proba};
use crate::rng::derive_seed;
use crate::schema::{FeatureGroup, FeatureSchema};

/// Member counts allowed in replication mode.
pub const REPLICATION_SIZES: std::ops::RangeInclusive<usize> = 2..=7;

/// Which schema slots a member sees.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    #[default]
    All,
    Shape,
    Texture,
    Color,
    /// Explicit slot names (any order; resolved in schema order).
    Names(Vec<String>),
}

impl Selector {
    pub fn group(g: FeatureGroup) -> Self {
        match g {
            FeatureGroup::Shape => Selector::Shape,
            FeatureGroup::Texture => Selector::Texture,
            FeatureGroup::Color => Selector::Color,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Selector::All => "all".into(),
            Selector::Shape => "shape".into(),
            Selector::Texture => "texture".into(),
            Selector::Color => "color".into(),
            Selector::Names(n) => format!("{} selected", n.len()),
        }
    }

    /// Column indices into `schema`, increasing.
    pub fn resolve(&self, schema: &FeatureSchema, member: usize) -> Result<Vec<usize>> {
        let cols = match self {
            Selector::All => (0..schema.len()).collect(),
            Selector::Shape => schema.group_columns(FeatureGroup::Shape),
            Selector::Texture => schema.group_columns(FeatureGroup::Texture),
            Selector::Color => schema.group_columns(FeatureGroup::Color),
            Selector::Names(names) => {
                let mut c = names
                    .iter()
                    .map(|n| schema.position(n).ok_or_else(|| Error::UnknownFeature(n.clone())))
                    .collect::<Result<Vec<_>>>()?;
                c.sort_unstable();
                c.dedup();
                c
            }
        };
        if cols.is_empty() {
            return Err(Error::EmptySelection { member });
        }
        Ok(cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    #[serde(flatten)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub group: Selector,
}

impl MemberSpec {
    pub fn new(learner: LearnerConfig, group: Selector) -> Self {
        Self { learner, group }
    }

    pub fn label(&self) -> String {
        match self.group {
            Selector::All => self.learner.kind().name().to_string(),
            ref g => format!("{}_{}", self.learner.kind().name(), g.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    HardVote,
    SoftVote,
    Stacking,
}

impl Combiner {
    pub fn name(self) -> &'static str {
        match self {
            Combiner::HardVote => "hard voting",
            Combiner::SoftVote => "soft voting",
            Combiner::Stacking => "stacking",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub members: Vec<MemberSpec>,
    pub combiner: Combiner,
    /// Voting weights, one per member; non-negative with a positive sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub stacking: StackingSpec,
    /// Enforce the 2..=7 member range of the combination experiments.
    #[serde(default)]
    pub replication: bool,
}

impl EnsembleSpec {
    pub fn new(members: Vec<MemberSpec>, combiner: Combiner) -> Self {
        Self {
            members,
            combiner,
            weights: None,
            stacking: StackingSpec::default(),
            replication: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.members.len();
        if n == 0 {
            return Err(Error::InvalidParam("ensemble has no members".into()));
        }
        if self.replication && !REPLICATION_SIZES.contains(&n) {
            return Err(Error::InvalidParam(format!(
                "replication mode needs 2 to 7 members, got {n}"
            )));
        }
        if let Some(w) = &self.weights {
            if w.len() != n {
                return Err(Error::InvalidParam(format!("{} weights for {n} members", w.len())));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidParam(
                    "weights must be non-negative with a positive sum".into(),
                ));
            }
        }
        Ok(())
    }

    /// Short row label such as `RF_shape, ET_texture`.
    pub fn label(&self) -> String {
        self.members.iter().map(MemberSpec::label).collect::<Vec<_>>().join(", ")
    }

    /// Member `i`'s config with a seed derived from `seed` unless it sets its own.
    pub(crate) fn member_config(&self, i: usize, seed: u64) -> LearnerConfig {
        let mut cfg = self.members[i].learner.clone();
        if cfg.seed.is_none() {
            cfg.seed = Some(derive_seed(seed, i as u64));
        }
        cfg
    }
}

/// A fitted member together with the schema columns it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedMember {
    pub kind: LearnerKind,
    pub selector: Selector,
    pub columns: Vec<usize>,
    pub model: FittedLearner,
}

impl FittedMember {
    pub(crate) fn fit(
        cfg: &LearnerConfig,
        selector: &Selector,
        train: &LabeledDataset,
        rows: Option<&[usize]>,
        member: usize,
    ) -> Result<Self> {
        let columns = selector.resolve(train.schema(), member)?;
        let mut x = train.features().select_columns(&columns);
        let mut y = train.label_indices();
        if let Some(r) = rows {
            x = x.select_rows(r);
            y = r.iter().map(|&i| y[i]).collect();
        }
        let model = fit(cfg, &x, &y).map_err(|e| Error::member(member, e))?;
        Ok(Self {
            kind: cfg.kind(),
            selector: selector.clone(),
            columns,
            model,
        })
    }

    /// Probabilities for a full schema row.
    pub fn predict_full_row(&self, x: &[f64]) -> Proba {
        let sub: Vec<f64> = self.columns.iter().map(|&c| x[c]).collect();
        self.model.predict_proba_row(&sub)
    }
}

/// Fit every member on the full training set, in parallel, in member order.
pub(crate) fn fit_members(spec: &EnsembleSpec, train: &LabeledDataset, seed: u64) -> Result<Vec<FittedMember>> {
    (0..spec.members.len())
        .into_par_iter()
        .map(|i| FittedMember::fit(&spec.member_config(i, seed), &spec.members[i].group, train, None, i))
        .collect()
}

/// A fitted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedEnsemble {
    Voting(Voting),
    Stacking(Stacking),
}

impl FittedEnsemble {
    pub fn members(&self) -> &[FittedMember] {
        match self {
            FittedEnsemble::Voting(v) => v.members(),
            FittedEnsemble::Stacking(s) => s.members(),
        }
    }
}

impl Classifier for FittedEnsemble {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        match self {
            FittedEnsemble::Voting(v) => v.predict_proba_row(x),
            FittedEnsemble::Stacking(s) => s.predict_proba_row(x),
        }
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        match self {
            FittedEnsemble::Voting(v) => v.predict_row(x),
            FittedEnsemble::Stacking(s) => s.predict_row(x),
        }
    }
}

/// Fit `spec` on (standardized) training data.
pub fn fit_ensemble(
    spec: &EnsembleSpec,
    train: &LabeledDataset,
    seed: u64,
) -> Result<(FittedEnsemble, Option<StackingDiagnostics>)> {
    match spec.combiner {
        Combiner::HardVote | Combiner::SoftVote => Ok((FittedEnsemble::Voting(fit_voting(spec, train, seed)?), None)),
        Combiner::Stacking => {
            let (s, d) = fit_stacking(spec, train, seed)?;
            Ok((FittedEnsemble::Stacking(s), Some(d)))
        }
    }
}
