//! Exact Euclidean k-nearest neighbours.

use serde::{Deserialize, Serialize};

use super::{check_standardized, Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
    pub allow_unstandardized: bool,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 5,
            allow_unstandardized: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    x: Matrix,
    y: Vec<usize>,
}

impl Knn {
    pub fn fit(p: &KnnParams, x: &Matrix, y: &[usize]) -> Result<Self> {
        if p.k == 0 || p.k > x.rows() {
            return Err(Error::InvalidParam(format!("k = {} with {} training samples", p.k, x.rows())));
        }
        check_standardized("kNN", x, p.allow_unstandardized)?;
        Ok(Self {
            k: p.k,
            x: x.clone(),
            y: y.to_vec(),
        })
    }

    /// Indices of the k nearest training samples; equal distances go to the lower index.
    pub fn neighbours(&self, q: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for Knn {
    /// Class frequencies among the neighbours.
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        let mut p = [0.0; K];
        for i in self.neighbours(x) {
            p[self.y[i]] += 1.0;
        }
        p.map(|v| v / self.k as f64)
    }
}
