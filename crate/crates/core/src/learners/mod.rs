//! Base classifiers behind one fit / predict / predict-probabilities interface.
//!
//! Every learner consumes a dense feature matrix and class indices in
//! canonical order and produces a probability row per sample over all
//! [`ClassLabel::COUNT`] classes, even those absent from training.
//!
//! Determinism: a learner fitted twice on the same data with the same
//! configuration (including the seed) is bit-identical, whatever the size of
//! the rayon pool it runs in.

mod boosting;
mod forest;
mod knn;
mod logreg;
mod mlp;
mod svm;
pub mod tree;

pub use boosting::{BoostingParams, GradientBoosting};
pub use forest::{Forest, ForestKind, ForestParams};
pub use knn::{Knn, KnnParams};
pub use logreg::{LogReg, LogRegParams};
pub use mlp::{Mlp, MlpParams};
pub use svm::{Kernel, Svm, SvmParams};
pub use tree::{ClassWeight, DecisionTree, DecisionTreeParams, MaxFeatures};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::matrix::Matrix;

pub(crate) const K: usize = ClassLabel::COUNT;

/// Probability row over the canonical classes.
pub type Proba = [f64; K];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LearnerKind {
    Dt,
    Et,
    Rf,
    Gb,
    Svm,
    #[serde(alias = "kNN")]
    Knn,
    Mlp,
    #[serde(rename = "LOGREG")]
    LogReg,
}

impl LearnerKind {
    /// The seven base learners, in the order experiments enumerate them.
    pub const POOL: [LearnerKind; 7] = [
        LearnerKind::Dt,
        LearnerKind::Et,
        LearnerKind::Gb,
        LearnerKind::Rf,
        LearnerKind::Svm,
        LearnerKind::Knn,
        LearnerKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Dt => "DT",
            LearnerKind::Et => "ET",
            LearnerKind::Rf => "RF",
            LearnerKind::Gb => "GB",
            LearnerKind::Svm => "SVM",
            LearnerKind::Knn => "kNN",
            LearnerKind::Mlp => "MLP",
            LearnerKind::LogReg => "LOGREG",
        }
    }

    /// Learners whose fit consumes randomness and therefore needs a seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, LearnerKind::Et | LearnerKind::Rf | LearnerKind::Svm | LearnerKind::Mlp)
    }

    pub fn is_tree_based(self) -> bool {
        matches!(self, LearnerKind::Dt | LearnerKind::Et | LearnerKind::Rf | LearnerKind::Gb)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DT" => Ok(LearnerKind::Dt),
            "ET" => Ok(LearnerKind::Et),
            "RF" => Ok(LearnerKind::Rf),
            "GB" => Ok(LearnerKind::Gb),
            "SVM" => Ok(LearnerKind::Svm),
            "KNN" => Ok(LearnerKind::Knn),
            "MLP" => Ok(LearnerKind::Mlp),
            "LOGREG" | "LR" => Ok(LearnerKind::LogReg),
            other => Err(Error::Parse(format!("unknown learner kind `{other}`"))),
        }
    }
}

/// Kind-specific hyperparameters; serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum LearnerParams {
    Dt(DecisionTreeParams),
    Et(ForestParams),
    Rf(ForestParams),
    Gb(BoostingParams),
    Svm(SvmParams),
    Knn(KnnParams),
    Mlp(MlpParams),
    #[serde(rename = "LOGREG")]
    LogReg(LogRegParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    #[serde(flatten)]
    pub params: LearnerParams,
    /// Required for stochastic kinds; ensembles and experiments derive one per member.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl LearnerConfig {
    pub fn new(params: LearnerParams) -> Self {
        Self { params, seed: None }
    }

    /// Documented defaults for `kind`, without a seed.
    pub fn default_for(kind: LearnerKind) -> Self {
        Self::new(match kind {
            LearnerKind::Dt => LearnerParams::Dt(DecisionTreeParams::default()),
            LearnerKind::Et => LearnerParams::Et(ForestParams::default()),
            LearnerKind::Rf => LearnerParams::Rf(ForestParams::default()),
            LearnerKind::Gb => LearnerParams::Gb(BoostingParams::default()),
            LearnerKind::Svm => LearnerParams::Svm(SvmParams::default()),
            LearnerKind::Knn => LearnerParams::Knn(KnnParams::default()),
            LearnerKind::Mlp => LearnerParams::Mlp(MlpParams::default()),
            LearnerKind::LogReg => LearnerParams::LogReg(LogRegParams::default()),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn kind(&self) -> LearnerKind {
        match self.params {
            LearnerParams::Dt(_) => LearnerKind::Dt,
            LearnerParams::Et(_) => LearnerKind::Et,
            LearnerParams::Rf(_) => LearnerKind::Rf,
            LearnerParams::Gb(_) => LearnerKind::Gb,
            LearnerParams::Svm(_) => LearnerKind::Svm,
            LearnerParams::Knn(_) => LearnerKind::Knn,
            LearnerParams::Mlp(_) => LearnerKind::Mlp,
            LearnerParams::LogReg(_) => LearnerKind::LogReg,
        }
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidParam(format!("{} is stochastic and needs a seed", self.kind()))
        })
    }
}

/// A fitted base learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedLearner {
    Tree(DecisionTree),
    Forest(Forest),
    Boosting(GradientBoosting),
    Knn(Knn),
    Svm(Svm),
    Mlp(Mlp),
    LogReg(LogReg),
}

impl FittedLearner {
    /// Trees of a tree-based learner (all rounds and classes for boosting).
    pub fn trees(&self) -> Option<Vec<&tree::Tree>> {
        match self {
            FittedLearner::Tree(t) => Some(vec![t.tree()]),
            FittedLearner::Forest(f) => Some(f.trees().iter().collect()),
            FittedLearner::Boosting(b) => Some(b.trees().collect()),
            _ => None,
        }
    }
}

/// Uniform prediction interface.
pub trait Classifier: Sync {
    fn predict_proba_row(&self, x: &[f64]) -> Proba;

    fn predict_row(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba_row(x))
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<Proba> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_proba_row(x.row(i)))
            .collect()
    }

    fn predict(&self, x: &Matrix) -> Vec<usize> {
        self.predict_proba(x).iter().map(|p| argmax(p)).collect()
    }
}

impl Classifier for FittedLearner {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        match self {
            FittedLearner::Tree(m) => m.predict_proba_row(x),
            FittedLearner::Forest(m) => m.predict_proba_row(x),
            FittedLearner::Boosting(m) => m.predict_proba_row(x),
            FittedLearner::Knn(m) => m.predict_proba_row(x),
            FittedLearner::Svm(m) => m.predict_proba_row(x),
            FittedLearner::Mlp(m) => m.predict_proba_row(x),
            FittedLearner::LogReg(m) => m.predict_proba_row(x),
        }
    }
}

/// Fit the learner described by `cfg` on rows `x` with class indices `y`.
pub fn fit(cfg: &LearnerConfig, x: &Matrix, y: &[usize]) -> Result<FittedLearner> {
    validate_training(x, y)?;
    Ok(match &cfg.params {
        LearnerParams::Dt(p) => FittedLearner::Tree(DecisionTree::fit(p, x, y)?),
        LearnerParams::Et(p) => FittedLearner::Forest(Forest::fit(ForestKind::Extra, p, x, y, cfg.require_seed()?)?),
        LearnerParams::Rf(p) => FittedLearner::Forest(Forest::fit(ForestKind::Random, p, x, y, cfg.require_seed()?)?),
        LearnerParams::Gb(p) => FittedLearner::Boosting(GradientBoosting::fit(p, x, y)?),
        LearnerParams::Svm(p) => FittedLearner::Svm(Svm::fit(p, x, y, cfg.require_seed()?)?),
        LearnerParams::Knn(p) => FittedLearner::Knn(Knn::fit(p, x, y)?),
        LearnerParams::Mlp(p) => FittedLearner::Mlp(Mlp::fit(p, x, y, cfg.require_seed()?)?),
        LearnerParams::LogReg(p) => FittedLearner::LogReg(LogReg::fit(p, x, y)?),
    })
}

fn validate_training(x: &Matrix, y: &[usize]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptyData("no training samples".into()));
    }
    if x.cols() == 0 {
        return Err(Error::EmptyData("no feature columns".into()));
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("{} labels for {} rows", y.len(), x.rows())));
    }
    if let Some(bad) = y.iter().find(|&&c| c >= K) {
        return Err(Error::InvalidLabel(bad.to_string()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training matrix".into()));
    }
    Ok(())
}

/// Loose guard for scale-sensitive learners: a column with `|mean| > 3` or
/// `std > 3` cannot have come out of a standardizer fitted on comparable data.
pub(crate) fn check_standardized(learner: &'static str, x: &Matrix, allow: bool) -> Result<()> {
    if allow {
        return Ok(());
    }
    let (means, stds) = x.column_moments();
    for (column, (&mean, &std)) in means.iter().zip(&stds).enumerate() {
        if mean.abs() > 3.0 || std > 3.0 {
            return Err(Error::Unstandardized {
                learner,
                column,
                mean,
                std,
            });
        }
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub(crate) fn softmax(z: &[f64]) -> Proba {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; K];
    let mut s = 0.0;
    for (o, v) in out.iter_mut().zip(z) {
        *o = (v - m).exp();
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
    out
}

pub(crate) fn validate_range(name: &str, value: f64, lo: f64, hi: f64, lo_open: bool) -> Result<()> {
    let ok = if lo_open { value > lo } else { value >= lo } && value <= hi && value.is_finite();
    if ok {
        Ok(())
    } else {
        let open = if lo_open { "(" } else { "[" };
        Err(Error::InvalidParam(format!("{name} = {value} outside {open}{lo}, {hi}]")))
    }
}
