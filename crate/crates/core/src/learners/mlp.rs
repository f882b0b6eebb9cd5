//! One-hidden-layer perceptron: ReLU hidden units, softmax output,
//! cross-entropy loss, mini-batch gradient descent with momentum.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_standardized, softmax, validate_range, Classifier, Proba, K};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// L2 penalty `l2 / 2 * ||W||²` on both weight matrices (not biases).
    pub l2: f64,
    pub momentum: f64,
    pub allow_unstandardized: bool,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_units: 64,
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 32,
            l2: 1e-4,
            momentum: 0.9,
            allow_unstandardized: false,
        }
    }
}

/// Parameters are one flat vector laid out as `[W1 (h×d), b1 (h), W2 (K×h), b2 (K)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    n_inputs: usize,
    n_hidden: usize,
    params: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, n_hidden: usize, seed: u64) -> Self {
        let mut rng = rng_for(seed, 0);
        let mut params = Vec::with_capacity(n_hidden * (n_inputs + 1) + K * (n_hidden + 1));
        let a1 = (6.0 / (n_inputs + n_hidden) as f64).sqrt();
        params.extend((0..n_hidden * n_inputs).map(|_| rng.gen_range(-a1..a1)));
        params.extend(std::iter::repeat_n(0.0, n_hidden));
        let a2 = (6.0 / (n_hidden + K) as f64).sqrt();
        params.extend((0..K * n_hidden).map(|_| rng.gen_range(-a2..a2)));
        params.extend(std::iter::repeat_n(0.0, K));
        Self {
            n_inputs,
            n_hidden,
            params,
        }
    }

    pub fn fit(p: &MlpParams, x: &Matrix, y: &[usize], seed: u64) -> Result<Self> {
        if p.hidden_units == 0 || p.epochs == 0 || p.batch_size == 0 {
            return Err(Error::InvalidParam(
                "hidden_units, epochs and batch_size must be >= 1".into(),
            ));
        }
        validate_range("learning_rate", p.learning_rate, 0.0, 10.0, true)?;
        validate_range("momentum", p.momentum, 0.0, 0.999, false)?;
        validate_range("l2", p.l2, 0.0, f64::MAX, false)?;
        check_standardized("MLP", x, p.allow_unstandardized)?;

        let mut net = Self::init(x.cols(), p.hidden_units, seed);
        let mut velocity = vec![0.0; net.params.len()];
        let mut order: Vec<usize> = (0..x.rows()).collect();
        for epoch in 0..p.epochs {
            order.shuffle(&mut rng_for(seed, 1 + epoch as u64));
            let mut epoch_loss = 0.0;
            for batch in order.chunks(p.batch_size) {
                let (loss, grad) = net.batch_loss_and_gradient(x, y, batch, p.l2);
                epoch_loss += loss * batch.len() as f64;
                for ((w, v), g) in net.params.iter_mut().zip(&mut velocity).zip(&grad) {
                    *v = p.momentum * *v - p.learning_rate * g;
                    *w += *v;
                }
            }
            if !epoch_loss.is_finite() || net.params.iter().any(|w| !w.is_finite()) {
                return Err(Error::Divergence {
                    round: epoch,
                    loss: epoch_loss / x.rows() as f64,
                });
            }
        }
        Ok(net)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (d, h) = (self.n_inputs, self.n_hidden);
        let b1 = h * d;
        let w2 = b1 + h;
        let b2 = w2 + K * h;
        (b1, w2, b2)
    }

    /// Hidden activations (post-ReLU) and output logits.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, [f64; K]) {
        let (d, h) = (self.n_inputs, self.n_hidden);
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let hidden: Vec<f64> = (0..h)
            .map(|j| {
                let w = &p[j * d..(j + 1) * d];
                let z = p[b1 + j] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let logits = std::array::from_fn(|k| {
            let w = &p[w2 + k * h..w2 + (k + 1) * h];
            p[b2 + k] + w.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>()
        });
        (hidden, logits)
    }

    fn batch_loss_and_gradient(&self, x: &Matrix, y: &[usize], batch: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let (d, h) = (self.n_inputs, self.n_hidden);
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let mut grad = vec![0.0; p.len()];
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &i in batch {
            let xi = x.row(i);
            let (hidden, logits) = self.forward(xi);
            let prob = softmax(&logits);
            loss -= prob[y[i]].max(f64::MIN_POSITIVE).ln();
            let dz: [f64; K] = std::array::from_fn(|k| (prob[k] - f64::from(u8::from(k == y[i]))) * scale);
            for k in 0..K {
                grad[b2 + k] += dz[k];
                for j in 0..h {
                    grad[w2 + k * h + j] += dz[k] * hidden[j];
                }
            }
            for j in 0..h {
                if hidden[j] <= 0.0 {
                    continue;
                }
                let dh: f64 = (0..K).map(|k| p[w2 + k * h + j] * dz[k]).sum();
                grad[b1 + j] += dh;
                for (g, xv) in grad[j * d..(j + 1) * d].iter_mut().zip(xi) {
                    *g += dh * xv;
                }
            }
        }
        let mut penalty = 0.0;
        for r in [0..b1, w2..b2] {
            for idx in r {
                penalty += p[idx] * p[idx];
                grad[idx] += l2 * p[idx];
            }
        }
        (loss * scale + 0.5 * l2 * penalty, grad)
    }

    /// Mean cross-entropy plus L2 penalty over all rows, with its gradient
    /// with respect to [`Mlp::params`].
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let all: Vec<usize> = (0..x.rows()).collect();
        self.batch_loss_and_gradient(x, y, &all, l2)
    }
}

impl Classifier for Mlp {
    fn predict_proba_row(&self, x: &[f64]) -> Proba {
        softmax(&self.forward(x).1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_xor_like_quadrants() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let a = (i % 4) as f64;
            let (sx, sy) = ([1.0, -1.0, 1.0, -1.0][i % 4], [1.0, 1.0, -1.0, -1.0][i % 4]);
            let jitter = (i / 4) as f64 * 0.01;
            rows.push([sx * (0.5 + jitter), sy * (0.5 + jitter + a * 0.01)]);
            y.push(usize::from(sx * sy > 0.0));
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let p = MlpParams {
            hidden_units: 16,
            epochs: 300,
            learning_rate: 0.05,
            ..Default::default()
        };
        let m = Mlp::fit(&p, &x, &y, 4).unwrap();
        assert_eq!(m.predict(&x), y);
    }

    #[test]
    fn divergence_reported() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [0.5], [-0.5]]).unwrap();
        let p = MlpParams {
            learning_rate: 10.0,
            l2: 1e300,
            ..Default::default()
        };
        assert!(matches!(Mlp::fit(&p, &x, &[0, 1, 0, 1], 1), Err(Error::Divergence { .. })));
    }
}
