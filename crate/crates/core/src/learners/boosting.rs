//! Multiclass gradient boosting with a softmax link.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, validate_stopping, GrowParams, Residual, Splitter, Tree};
use super::{softmax, validate_range, Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Floor on class priors so absent classes start at a finite score.
const PRIOR_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: Vec<f64>,
    learning_rate: f64,
    /// One regression tree per class per round.
    rounds: Vec<Vec<Tree>>,
    /// Mean training log-loss before the first round and after each round.
    train_loss: Vec<f64>,
}

fn log_loss(scores: &[[f64; K]], y: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(s, &c)| {
            let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - s[c]
        })
        .sum();
    total / y.len() as f64
}

impl GradientBoosting {
    pub fn fit(p: &BoostingParams, x: &Matrix, y: &[usize]) -> Result<Self> {
        validate_range("learning_rate", p.learning_rate, 0.0, 1.0, true)?;
        if p.n_rounds == 0 {
            return Err(Error::InvalidParam("n_rounds must be >= 1".into()));
        }
        if p.max_depth == 0 {
            return Err(Error::InvalidParam("max_depth must be >= 1".into()));
        }
        validate_stopping(p.min_samples_split, p.min_samples_leaf)?;
        let n = y.len();
        let mut counts = [0usize; K];
        for &c in y {
            counts[c] += 1;
        }
        let init: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64 / n as f64).max(PRIOR_FLOOR).ln())
            .collect();
        let mut scores: Vec<[f64; K]> = vec![std::array::from_fn(|k| init[k]); n];
        let grow_params = GrowParams {
            max_depth: Some(p.max_depth),
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features: x.cols(),
            splitter: Splitter::Best,
        };
        let mut train_loss = vec![log_loss(&scores, y)];
        let mut rounds = Vec::with_capacity(p.n_rounds);
        for round in 0..p.n_rounds {
            let probs: Vec<Proba> = scores.iter().map(|s| softmax(s)).collect();
            let trees: Vec<Tree> = (0..K)
                .into_par_iter()
                .map(|k| {
                    let residuals: Vec<f64> = probs
                        .iter()
                        .zip(y)
                        .map(|(pr, &c)| f64::from(u8::from(c == k)) - pr[k])
                        .collect();
                    let crit = Residual {
                        residuals: &residuals,
                        n_classes: K,
                    };
                    grow(x, &crit, (0..n).collect(), &grow_params, &mut ChaCha8Rng::seed_from_u64(0))
                })
                .collect();
            for (i, s) in scores.iter_mut().enumerate() {
                for (k, t) in trees.iter().enumerate() {
                    s[k] += p.learning_rate * t.value(x.row(i))[0];
                }
            }
            let loss = log_loss(&scores, y);
            if !loss.is_finite() {
                return Err(Error::Divergence { round, loss });
            }
            train_loss.push(loss);
            rounds.push(trees);
        }
        Ok(Self {
            init,
            learning_rate: p.learning_rate,
            rounds,
            train_loss,
        })
    }

    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn trees(&self) -> impl Iterator<Item = &Tree> {
        self.rounds.iter().flatten()
    }

    fn scores(&self, x: &[f64]) -> [f64; K] {
        let mut s: [f64; K] = std::array::from_fn(|k| self.init[k]);
        for round in &self.rounds {
            for (k, t) in round.iter().enumerate() {
                s[k] += self.learning_rate * t.value(x)[0];
            }
        }
        s
    }
}

impl Classifier for GradientBoosting {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        softmax(&self.scores(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_data_separated() {
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64 - 9.5]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let p = BoostingParams {
            n_rounds: 20,
            max_depth: 1,
            ..Default::default()
        };
        let gb = GradientBoosting::fit(&p, &x, &y).unwrap();
        assert_eq!(gb.predict(&x), y);
        assert!(gb.train_loss().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_is_constant() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let gb = GradientBoosting::fit(&BoostingParams::default(), &x, &[1, 1, 1]).unwrap();
        let p = gb.predict_proba_row(&[5.0]);
        assert!((p[1] - 1.0).abs() < 1e-9);
        assert!(*gb.train_loss().last().unwrap() < 1e-9);
    }

    #[test]
    fn tiny_rate_stays_at_prior() {
        let x = Matrix::from_rows(&(0..10).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y = [0, 0, 0, 0, 0, 0, 1, 1, 2, 2];
        let p = BoostingParams {
            n_rounds: 1,
            learning_rate: 1e-3,
            ..Default::default()
        };
        let gb = GradientBoosting::fit(&p, &x, &y).unwrap();
        let prior = [0.6, 0.2, 0.2];
        for i in 0..10 {
            let q = gb.predict_proba_row(x.row(i));
            let kl: f64 = prior.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum();
            assert!(kl < 0.01, "kl {kl}");
        }
    }

    #[test]
    fn rejects_bad_rate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let p = BoostingParams {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(GradientBoosting::fit(&p, &x, &[0, 1]).is_err());
    }
}
