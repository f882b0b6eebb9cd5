//! Random forests and extremely randomized trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, leaf_proba, validate_stopping, ClassWeight, Gini, GrowParams, MaxFeatures, Splitter, Tree};
use super::{Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForestKind {
    /// Bootstrap samples, best split among a random feature subset.
    Random,
    /// Whole sample, one random threshold per candidate feature.
    Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    /// `None` picks the kind's default: on for RF, off for ET.
    pub bootstrap: Option<bool>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub class_weight: ClassWeight,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: None,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            class_weight: ClassWeight::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    kind: ForestKind,
    trees: Vec<Tree>,
}

impl Forest {
    /// Tree `t` draws all its randomness from stream `t` of `seed`, so the
    /// ensemble does not depend on how trees are scheduled across threads.
    pub fn fit(kind: ForestKind, p: &ForestParams, x: &Matrix, y: &[usize], seed: u64) -> Result<Self> {
        if p.n_trees == 0 {
            return Err(Error::InvalidParam("n_trees must be >= 1".into()));
        }
        validate_stopping(p.min_samples_split, p.min_samples_leaf)?;
        let max_features = p.max_features.resolve(x.cols())?;
        let bootstrap = p.bootstrap.unwrap_or(kind == ForestKind::Random);
        let crit = Gini {
            labels: y,
            class_weight: p.class_weight.weights(y),
        };
        let grow_params = GrowParams {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features,
            splitter: match kind {
                ForestKind::Random => Splitter::Best,
                ForestKind::Extra => Splitter::Random,
            },
        };
        let n = y.len();
        let trees = (0..p.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed, t as u64);
                let samples: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow(x, &crit, samples, &grow_params, &mut rng)
            })
            .collect();
        Ok(Self { kind, trees })
    }

    pub fn kind(&self) -> ForestKind {
        self.kind
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}

impl Classifier for Forest {
    /// Mean of the per-tree leaf distributions.
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        let mut p = [0.0; K];
        for t in &self.trees {
            let leaf = leaf_proba(t.value(x));
            for (a, b) in p.iter_mut().zip(leaf) {
                *a += b;
            }
        }
        let n = self.trees.len() as f64;
        p.map(|v| v / n)
    }
}
