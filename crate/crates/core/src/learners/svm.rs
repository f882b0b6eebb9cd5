//! One-vs-rest kernel SVM trained with the Pegasos stochastic subgradient method.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_standardized, softmax, validate_range, Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_for;

/// Above this many samples kernel rows are computed on demand instead of cached.
const GRAM_CACHE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    /// RBF width; `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    pub epochs: usize,
    pub allow_unstandardized: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::Rbf,
            c: 1.0,
            gamma: None,
            epochs: 30,
            allow_unstandardized: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    kernel: Kernel,
    gamma: f64,
    support: Matrix,
    /// `coef[k][s]`: signed weight of support vector `s` in the class-`k` machine.
    coef: Vec<Vec<f64>>,
}

/// Kernel plus a constant 1, which plays the role of an unregularized-ish bias.
fn kernel(kind: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let k = match kind {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-gamma * d2).exp()
        }
    };
    k + 1.0
}

impl Svm {
    pub fn fit(p: &SvmParams, x: &Matrix, y: &[usize], seed: u64) -> Result<Self> {
        validate_range("C", p.c, 0.0, f64::MAX, true)?;
        if p.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be >= 1".into()));
        }
        let gamma = p.gamma.unwrap_or(1.0 / x.cols() as f64);
        validate_range("gamma", gamma, 0.0, f64::MAX, true)?;
        check_standardized("SVM", x, p.allow_unstandardized)?;

        let n = x.rows();
        let lambda = 1.0 / (p.c * n as f64);
        let orders: Vec<Vec<usize>> = (0..p.epochs)
            .map(|e| {
                let mut o: Vec<usize> = (0..n).collect();
                o.shuffle(&mut rng_for(seed, e as u64));
                o
            })
            .collect();
        let gram: Option<Vec<f64>> = (n <= GRAM_CACHE_LIMIT).then(|| {
            (0..n)
                .into_par_iter()
                .flat_map_iter(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| kernel(p.kernel, gamma, x.row(i), x.row(j)))
                .collect()
        });
        let row = |i: usize| -> Vec<f64> {
            match &gram {
                Some(g) => g[i * n..(i + 1) * n].to_vec(),
                None => (0..n).map(|j| kernel(p.kernel, gamma, x.row(i), x.row(j))).collect(),
            }
        };

        let steps = (p.epochs * n) as f64;
        let alphas: Vec<Vec<u32>> = (0..K)
            .into_par_iter()
            .map(|k| {
                let sign: Vec<f64> = y.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
                let mut alpha = vec![0u32; n];
                let mut g = vec![0.0; n];
                let mut t = 0.0;
                for order in &orders {
                    for &i in order {
                        t += 1.0;
                        if sign[i] * g[i] / (lambda * t) < 1.0 {
                            alpha[i] += 1;
                            for (gj, kij) in g.iter_mut().zip(row(i)) {
                                *gj += sign[i] * kij;
                            }
                        }
                    }
                }
                alpha
            })
            .collect();

        let support_idx: Vec<usize> = (0..n).filter(|&i| alphas.iter().any(|a| a[i] > 0)).collect();
        let coef = (0..K)
            .map(|k| {
                support_idx
                    .iter()
                    .map(|&i| {
                        let s = if y[i] == k { 1.0 } else { -1.0 };
                        alphas[k][i] as f64 * s / (lambda * steps)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            kernel: p.kernel,
            gamma,
            support: x.select_rows(&support_idx),
            coef,
        })
    }

    /// One-vs-rest decision values.
    pub fn margins(&self, x: &[f64]) -> [f64; K] {
        let kv: Vec<f64> = self
            .support
            .iter_rows()
            .map(|s| kernel(self.kernel, self.gamma, s, x))
            .collect();
        std::array::from_fn(|k| self.coef[k].iter().zip(&kv).map(|(c, v)| c * v).sum())
    }

    pub fn n_support(&self) -> usize {
        self.support.rows()
    }
}

impl Classifier for Svm {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        softmax(&self.margins(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn linear_separable_blobs() {
        // classes split by the line x0 + x1 = 0
        let mut rng = rng_for(9, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let c = i % 2;
            let s = if c == 0 { -1.0 } else { 1.0 };
            rows.push([s + rng.gen_range(-0.6..0.6), s + rng.gen_range(-0.6..0.6)]);
            y.push(c);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let p = SvmParams {
            kernel: Kernel::Linear,
            ..Default::default()
        };
        let m = Svm::fit(&p, &x, &y, 1).unwrap();
        let acc = m.predict(&x).iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / 200.0;
        assert!(acc >= 0.98, "accuracy {acc}");
        // the class-1 machine is positive on the analytic positive side
        assert!(m.margins(&[2.0, 2.0])[1] > 0.0);
        assert!(m.margins(&[-2.0, -2.0])[1] < 0.0);
    }

    #[test]
    fn rbf_fits_rings() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            let a = i as f64 * 0.7;
            let r = if i % 2 == 0 { 0.5 } else { 2.0 };
            rows.push([r * a.cos(), r * a.sin()]);
            y.push(i % 2);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let p = SvmParams {
            gamma: Some(1.0),
            c: 10.0,
            ..Default::default()
        };
        let m = Svm::fit(&p, &x, &y, 2).unwrap();
        assert_eq!(m.predict(&x), y);
    }
}
