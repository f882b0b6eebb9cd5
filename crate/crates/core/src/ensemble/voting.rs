use serde::{Deserialize, Serialize};

use super::{fit_members, Combiner, EnsembleSpec, FittedMember};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::learners::{argmax, Classifier, Proba, K};

/// Hard or soft weighted voting.
///
/// Hard voting reports the weighted vote share as its probability row. Ties
/// in the vote are broken by the weighted sum of member probabilities and
/// then by canonical class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voting {
    soft: bool,
    weights: Vec<f64>,
    members: Vec<FittedMember>,
}

impl Voting {
    pub fn from_members(members: Vec<FittedMember>, weights: Option<Vec<f64>>, soft: bool) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParam("ensemble has no members".into()));
        }
        let mut weights = weights.unwrap_or_else(|| vec![1.0; members.len()]);
        if weights.len() != members.len() {
            return Err(Error::InvalidParam(format!("{} weights for {} members", weights.len(), members.len())));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidParam("weights must be non-negative with a positive sum".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { soft, weights, members })
    }

    pub fn members(&self) -> &[FittedMember] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_soft(&self) -> bool {
        self.soft
    }

    fn member_rows(&self, x: &[f64]) -> Vec<Proba> {
        self.members.iter().map(|m| m.predict_full_row(x)).collect()
    }

    fn soft_average(&self, rows: &[Proba]) -> Proba {
        let mut p = [0.0; K];
        for (row, w) in rows.iter().zip(&self.weights) {
            for k in 0..K {
                p[k] += w * row[k];
            }
        }
        p
    }

    fn vote_share(&self, rows: &[Proba]) -> Proba {
        let mut p = [0.0; K];
        for (row, w) in rows.iter().zip(&self.weights) {
            p[argmax(row)] += w;
        }
        p
    }
}

impl Classifier for Voting {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        let rows = self.member_rows(x);
        if self.soft {
            self.soft_average(&rows)
        } else {
            self.vote_share(&rows)
        }
    }

    fn predict_row(&self, x: &[f64]) -> usize {
        let rows = self.member_rows(x);
        let soft = self.soft_average(&rows);
        if self.soft {
            return argmax(&soft);
        }
        let votes = self.vote_share(&rows);
        let best = votes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..K).filter(|&k| (votes[k] - best).abs() <= 1e-12).collect();
        // strict comparison keeps the lowest index among equal sums
        tied.into_iter()
            .fold((usize::MAX, f64::NEG_INFINITY), |(bk, bv), k| if soft[k] > bv { (k, soft[k]) } else { (bk, bv) })
            .0
    }
}

pub fn fit_voting(spec: &EnsembleSpec, train: &LabeledDataset, seed: u64) -> Result<Voting> {
    spec.validate()?;
    let soft = match spec.combiner {
        Combiner::HardVote => false,
        Combiner::SoftVote => true,
        Combiner::Stacking => return Err(Error::InvalidParam("fit_voting called with a stacking spec".into())),
    };
    let members = fit_members(spec, train, seed)?;
    Voting::from_members(members, spec.weights.clone(), soft)
}
