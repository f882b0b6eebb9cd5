//! Multinomial logistic regression, full-batch gradient descent with
//! backtracking line search.

use serde::{Deserialize, Serialize};

use super::{softmax, validate_range, Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    /// Penalty `l2 / 2 * ||W||²` on the weights (not the intercepts).
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop once every gradient component is below this.
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_epochs: 1000,
            tol: 1e-6,
        }
    }
}

/// Rows of `weights` are classes; the last column is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    n_inputs: usize,
    weights: Vec<f64>,
    converged: bool,
}

struct Objective<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    l2: f64,
}

impl Objective<'_> {
    fn eval(&self, w: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let d = self.x.cols();
        let stride = d + 1;
        let n = self.x.rows() as f64;
        let mut loss = 0.0;
        let mut grad = if want_grad { vec![0.0; w.len()] } else { Vec::new() };
        for (xi, &yi) in self.x.iter_rows().zip(self.y) {
            let z: [f64; K] = std::array::from_fn(|k| {
                let row = &w[k * stride..(k + 1) * stride];
                row[d] + row[..d].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()
            });
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - z[yi];
            if want_grad {
                for k in 0..K {
                    let r = (z[k] - lse).exp() - f64::from(u8::from(k == yi));
                    let g = &mut grad[k * stride..(k + 1) * stride];
                    for (gj, xv) in g[..d].iter_mut().zip(xi) {
                        *gj += r * xv;
                    }
                    g[d] += r;
                }
            }
        }
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        for k in 0..K {
            for j in 0..d {
                let v = w[k * stride + j];
                loss += 0.5 * self.l2 * v * v;
                if want_grad {
                    grad[k * stride + j] += self.l2 * v;
                }
            }
        }
        (loss, grad)
    }
}

impl LogReg {
    pub fn fit(p: &LogRegParams, x: &Matrix, y: &[usize]) -> Result<Self> {
        validate_range("l2", p.l2, 0.0, f64::MAX, false)?;
        validate_range("tol", p.tol, 0.0, f64::MAX, true)?;
        if p.max_epochs == 0 {
            return Err(Error::InvalidParam("max_epochs must be >= 1".into()));
        }
        let obj = Objective { x, y, l2: p.l2 };
        let mut w = vec![0.0; K * (x.cols() + 1)];
        let (mut f, mut g) = obj.eval(&w, true);
        let mut step = 1.0;
        let mut converged = false;
        for _ in 0..p.max_epochs {
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gmax < p.tol {
                converged = true;
                break;
            }
            let g2: f64 = g.iter().map(|v| v * v).sum();
            // Armijo backtracking from a step slightly larger than the last accepted one
            step *= 2.0;
            let mut accepted = false;
            while step > 1e-12 {
                let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                let (fc, _) = obj.eval(&cand, false);
                if fc <= f - 1e-4 * step * g2 {
                    w = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // no descent possible at machine precision: at the optimum
                converged = true;
                break;
            }
            (f, g) = obj.eval(&w, true);
            if !f.is_finite() {
                return Err(Error::Divergence { round: 0, loss: f });
            }
        }
        if !converged {
            log::warn!("logistic regression did not reach tol {} in {} epochs", p.tol, p.max_epochs);
        }
        Ok(Self {
            n_inputs: x.cols(),
            weights: w,
            converged,
        })
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Classifier for LogReg {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        let d = self.n_inputs;
        let z: [f64; K] = std::array::from_fn(|k| {
            let row = &self.weights[k * (d + 1)..(k + 1) * (d + 1)];
            row[d] + row[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        });
        softmax(&z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regularized_problem_converges() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0], [0.5, 0.2], [0.2, 0.9]]).unwrap();
        let y = [1, 0, 2, 1, 0, 2];
        let p = LogRegParams {
            l2: 0.1,
            ..Default::default()
        };
        let m = LogReg::fit(&p, &x, &y).unwrap();
        assert!(m.converged());
        // stationarity check with an independent finite-difference gradient
        let obj = Objective { x: &x, y: &y, l2: 0.1 };
        for i in 0..m.weights().len() {
            let mut a = m.weights().to_vec();
            let mut b = a.clone();
            a[i] += 1e-5;
            b[i] -= 1e-5;
            let fd = (obj.eval(&a, false).0 - obj.eval(&b, false).0) / 2e-5;
            assert!(fd.abs() < 1e-5, "component {i}: {fd}");
        }
    }

    #[test]
    fn separable_data_classified() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [1.0], [2.0], [5.0], [6.0]]).unwrap();
        let y = [0, 0, 1, 1, 2, 2];
        let m = LogReg::fit(&LogRegParams::default(), &x, &y).unwrap();
        assert_eq!(m.predict(&x), y);
    }
}
