use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_members, Combiner, EnsembleSpec, FittedMember};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::learners::{argmax, fit, Classifier, FittedLearner, LearnerConfig, LearnerKind, Proba, K};
use crate::matrix::Matrix;
use crate::rng::derive_seed;

/// What each member contributes to the meta-feature row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaInput {
    /// One column per class.
    #[default]
    Probabilities,
    /// One column holding the predicted class index.
    Labels,
}

impl MetaInput {
    pub fn width(self) -> usize {
        match self {
            MetaInput::Probabilities => K,
            MetaInput::Labels => 1,
        }
    }

    fn push(self, p: &Proba, out: &mut Vec<f64>) {
        match self {
            MetaInput::Probabilities => out.extend_from_slice(p),
            MetaInput::Labels => out.push(argmax(p) as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackingSpec {
    pub n_folds: usize,
    pub meta: LearnerConfig,
    pub meta_input: MetaInput,
}

impl Default for StackingSpec {
    fn default() -> Self {
        Self {
            n_folds: 5,
            meta: LearnerConfig::default_for(LearnerKind::LogReg),
            meta_input: MetaInput::Probabilities,
        }
    }
}

/// Out-of-fold bookkeeping kept from a stacking fit.
#[derive(Debug, Clone, PartialEq)]
pub struct StackingDiagnostics {
    /// Fold of each training sample.
    pub fold_of: Vec<usize>,
    /// Rows the members of fold `f` were fitted on.
    pub fold_train: Vec<Vec<usize>>,
    /// Out-of-fold meta-features, one row per training sample.
    pub meta_features: Matrix,
}

impl StackingDiagnostics {
    /// True when no sample's meta-features came from a member that saw it.
    pub fn leakage_free(&self) -> bool {
        self.fold_train
            .iter()
            .enumerate()
            .all(|(f, rows)| rows.iter().all(|&i| self.fold_of[i] != f))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stacking {
    meta_input: MetaInput,
    members: Vec<FittedMember>,
    meta: FittedLearner,
}

impl Stacking {
    pub fn members(&self) -> &[FittedMember] {
        &self.members
    }

    pub fn meta(&self) -> &FittedLearner {
        &self.meta
    }

    pub fn meta_input(&self) -> MetaInput {
        self.meta_input
    }

    pub fn meta_row(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.members.len() * self.meta_input.width());
        for m in &self.members {
            self.meta_input.push(&m.predict_full_row(x), &mut out);
        }
        out
    }
}

impl Classifier for Stacking {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        self.meta.predict_proba_row(&self.meta_row(x))
    }
}

pub fn fit_stacking(spec: &EnsembleSpec, train: &LabeledDataset, seed: u64) -> Result<(Stacking, StackingDiagnostics)> {
    spec.validate()?;
    if spec.combiner != Combiner::Stacking {
        return Err(Error::InvalidParam("fit_stacking called with a voting spec".into()));
    }
    let sp = &spec.stacking;
    let n_folds = sp.n_folds;
    let fold_of = train.stratified_folds(n_folds, derive_seed(seed, 2000))?;
    let fold_train: Vec<Vec<usize>> = (0..n_folds)
        .map(|f| (0..train.len()).filter(|&i| fold_of[i] != f).collect())
        .collect();

    let m = spec.members.len();
    let jobs: Vec<(usize, usize)> = (0..n_folds).flat_map(|f| (0..m).map(move |j| (f, j))).collect();
    let fold_models: Vec<FittedMember> = jobs
        .par_iter()
        .map(|&(f, j)| {
            FittedMember::fit(&spec.member_config(j, seed), &spec.members[j].group, train, Some(&fold_train[f]), j)
        })
        .collect::<Result<_>>()?;

    let width = m * sp.meta_input.width();
    let x = train.features();
    let rows: Vec<Vec<f64>> = (0..train.len())
        .into_par_iter()
        .map(|i| {
            let f = fold_of[i];
            let mut out = Vec::with_capacity(width);
            for member in &fold_models[f * m..(f + 1) * m] {
                sp.meta_input.push(&member.predict_full_row(x.row(i)), &mut out);
            }
            out
        })
        .collect();
    let meta_features = Matrix::from_rows(&rows)?;

    let mut meta_cfg = sp.meta.clone();
    if meta_cfg.seed.is_none() {
        meta_cfg.seed = Some(derive_seed(seed, 1000));
    }
    let meta = fit(&meta_cfg, &meta_features, &train.label_indices())
        .map_err(|e| Error::InvalidParam(format!("meta-learner: {e}")))?;
    let members = fit_members(spec, train, seed)?;
    Ok((
        Stacking {
            meta_input: sp.meta_input,
            members,
            meta,
        },
        StackingDiagnostics {
            fold_of,
            fold_train,
            meta_features,
        },
    ))
}
