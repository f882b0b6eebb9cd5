use std::fmt;

use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionMatrix;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::model::{ModelSpec, TrainedModel};

/// How a configuration is scored on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Protocol {
    /// Stratified train/test split.
    Holdout { test_fraction: f64 },
    /// Stratified k-fold; test-fold matrices are pooled.
    Cv { n_folds: usize },
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::Holdout { test_fraction: 0.2 }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Holdout { test_fraction } => write!(f, "stratified holdout {test_fraction}"),
            Protocol::Cv { n_folds } => write!(f, "stratified {n_folds}-fold cv"),
        }
    }
}

/// Train/test partitions of one dataset under a protocol.
#[derive(Debug, Clone)]
pub struct Partitions {
    pub protocol: Protocol,
    pub folds: Vec<(LabeledDataset, LabeledDataset)>,
}

impl Protocol {
    pub fn partition(&self, data: &LabeledDataset, seed: u64) -> Result<Partitions> {
        let folds = match *self {
            Protocol::Holdout { test_fraction } => vec![data.split(test_fraction, seed, true)?],
            Protocol::Cv { n_folds } => {
                let fold_of = data.stratified_folds(n_folds, seed)?;
                (0..n_folds)
                    .map(|f| {
                        let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| fold_of[i] == f);
                        (data.subset(&train), data.subset(&test))
                    })
                    .collect()
            }
        };
        Ok(Partitions {
            protocol: *self,
            folds,
        })
    }
}

impl Partitions {
    /// Train `spec` on each training part and pool the test matrices.
    pub fn evaluate(&self, spec: &ModelSpec, seed: u64) -> Result<ConfusionMatrix> {
        if self.folds.is_empty() {
            return Err(Error::EmptyData("no partitions".into()));
        }
        let mut pooled = ConfusionMatrix::zeros(ClassLabel::COUNT);
        for (train, test) in &self.folds {
            let (model, _) = TrainedModel::train(spec, train, seed)?;
            pooled.add(&model.evaluate(test)?.0)?;
        }
        Ok(pooled)
    }
}
