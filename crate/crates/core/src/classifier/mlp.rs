use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::check_binary_labels;
use crate::error::{FlameError, Result};
use crate::numerics::{check_dim, common_dim};

/// Bias-free two-layer ReLU network `Φ(θ; x) = v · relu(W x)`.
///
/// Without biases the network is positively homogeneous of degree two in its
/// parameters: `Φ(cθ; x) = c² Φ(θ; x)` for `c > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: usize,
    /// `hidden × input_dim`, row-major.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// Gradient of the mean logistic loss with respect to both weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

/// `log(1 + e^{−z})`, stable for large `|z|`.
fn softplus_neg(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `σ(−z)`, stable for large `|z|`.
fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

impl MlpModel {
    /// Gaussian initialization with standard deviation `1/√fan_in` per layer.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = Normal::new(0.0, 1.0 / (input_dim as f64).sqrt()).expect("positive std");
        let n2 = Normal::new(0.0, 1.0 / (hidden as f64).sqrt()).expect("positive std");
        let w1 = (0..hidden * input_dim)
            .map(|_| n1.sample(&mut rng))
            .collect();
        let w2 = (0..hidden).map(|_| n2.sample(&mut rng)).collect();
        MlpModel {
            input_dim,
            hidden,
            w1,
            w2,
        }
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .chunks_exact(self.input_dim)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> f64 {
        self.hidden_pre(x)
            .iter()
            .zip(&self.w2)
            .map(|(h, v)| h.max(0.0) * v)
            .sum()
    }

    /// `Φ(θ; x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim, x.len())?;
        Ok(self.forward_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.forward(x)? > 0.0)
    }

    /// Parameters flattened as `[w1, w2]`.
    pub fn parameters(&self) -> Vec<f64> {
        self.w1.iter().chain(&self.w2).copied().collect()
    }

    pub fn parameter_norm(&self) -> f64 {
        self.parameters().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn set_parameters(&mut self, theta: &[f64]) {
        let split = self.w1.len();
        self.w1.copy_from_slice(&theta[..split]);
        self.w2.copy_from_slice(&theta[split..]);
    }

    /// `θ → cθ`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.w1.iter_mut().chain(m.w2.iter_mut()).for_each(|v| *v *= c);
        m
    }

    /// Mean logistic loss `mean log(1 + exp(−y Φ))`, equal to binary
    /// cross-entropy on `sigmoid(Φ)`.
    pub fn loss(&self, inputs: &[Vec<f64>], labels: &[bool]) -> f64 {
        let n = inputs.len() as f64;
        inputs
            .iter()
            .zip(labels)
            .map(|(x, &l)| softplus_neg(sign(l) * self.forward_unchecked(x)))
            .sum::<f64>()
            / n
    }

    pub fn loss_and_gradient(&self, inputs: &[Vec<f64>], labels: &[bool]) -> (f64, MlpGradient) {
        let n = inputs.len() as f64;
        let mut g1 = vec![0.0; self.w1.len()];
        let mut g2 = vec![0.0; self.w2.len()];
        let mut loss = 0.0;
        for (x, &l) in inputs.iter().zip(labels) {
            let y = sign(l);
            let pre = self.hidden_pre(x);
            let out: f64 = pre.iter().zip(&self.w2).map(|(h, v)| h.max(0.0) * v).sum();
            let margin = y * out;
            loss += softplus_neg(margin);
            // d loss / d out
            let dout = -y * sigmoid_neg(margin) / n;
            for (k, &h) in pre.iter().enumerate() {
                if h > 0.0 {
                    g2[k] += dout * h;
                    let scale = dout * self.w2[k];
                    let row = &mut g1[k * self.input_dim..(k + 1) * self.input_dim];
                    for (g, v) in row.iter_mut().zip(x) {
                        *g += scale * v;
                    }
                }
            }
        }
        (loss / n, MlpGradient { w1: g1, w2: g2 })
    }

    /// One gradient step with the given learning rate; returns the loss before the step.
    pub(crate) fn step(&mut self, inputs: &[Vec<f64>], labels: &[bool], lr: f64) -> f64 {
        let (loss, g) = self.loss_and_gradient(inputs, labels);
        for (w, d) in self.w1.iter_mut().zip(&g.w1) {
            *w -= lr * d;
        }
        for (w, d) in self.w2.iter_mut().zip(&g.w2) {
            *w -= lr * d;
        }
        loss
    }
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

/// Full-batch gradient descent on the logistic loss.
///
/// Returns the trained model and the loss before every epoch, followed by the
/// final loss.
pub fn train_mlp(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &MlpParams,
) -> Result<(MlpModel, Vec<f64>)> {
    if params.hidden == 0 || params.epochs == 0 {
        return Err(FlameError::config(
            "mlp_hidden",
            "hidden width and epochs must be positive",
        ));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(FlameError::config(
            "mlp_learning_rate",
            "must be a positive finite number",
        ));
    }
    if inputs.len() != labels.len() {
        return Err(FlameError::Dimension {
            expected: inputs.len(),
            found: labels.len(),
        });
    }
    let dim = common_dim(inputs)?;
    check_binary_labels(labels)?;

    let mut model = MlpModel::init(dim, params.hidden, params.seed);
    let mut trace = Vec::with_capacity(params.epochs + 1);
    for epoch in 0..params.epochs {
        let loss = model.step(inputs, labels, params.learning_rate);
        if !loss.is_finite() || model.w1.iter().chain(&model.w2).any(|v| !v.is_finite()) {
            return Err(FlameError::Divergence { epoch });
        }
        trace.push(loss);
    }
    let last = model.loss(inputs, labels);
    if !last.is_finite() {
        return Err(FlameError::Divergence {
            epoch: params.epochs,
        });
    }
    trace.push(last);
    Ok((model, trace))
}
