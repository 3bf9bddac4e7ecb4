use serde::{Deserialize, Serialize};

use super::probes::{probe_set, sign_agreement};
use crate::classifier::{check_binary_labels, MlpModel};
use crate::error::{FlameError, Result};
use crate::numerics::common_dim;

/// Degree of homogeneity of the bias-free two-layer ReLU network.
pub const HOMOGENEITY_DEGREE: i32 = 2;
pub const DEFAULT_MARGIN_TOLERANCE: f64 = 0.1;
/// Learning-rate growth is re-evaluated this often.
const GROWTH_PERIOD: usize = 100;
/// Upper bound on `lr_eff / lr`.
const MAX_GROWTH: f64 = 1e24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousParams {
    pub hidden: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub margin_tolerance: f64,
}

impl Default for HomogeneousParams {
    fn default() -> Self {
        HomogeneousParams {
            hidden: 16,
            steps: 50_000,
            learning_rate: 0.05,
            seed: 0,
            margin_tolerance: DEFAULT_MARGIN_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousRunReport {
    /// `y_i Φ(θ; x_i) / ‖θ‖²` at the end of training.
    pub normalized_margins: Vec<f64>,
    pub inferred_support_set: Vec<usize>,
    pub direction_cosine: f64,
    pub prediction_agreement: f64,
    pub probe_count: usize,
    pub final_loss: f64,
    pub support_final_loss: f64,
    /// Normalized margins of the support-only model on the full data.
    pub support_model_min_margin: f64,
}

/// `y_i Φ(θ; x_i) / ‖θ‖^L` for every example.
pub fn normalized_margins(model: &MlpModel, inputs: &[Vec<f64>], labels: &[bool]) -> Vec<f64> {
    let norm = model.parameter_norm().powi(HOMOGENEITY_DEGREE);
    inputs
        .iter()
        .zip(labels)
        .map(|(x, &l)| if l { 1.0 } else { -1.0 } * model.forward_unchecked(x) / norm)
        .collect()
}

/// Indices whose normalized margin is within a factor `1 + tol` of the minimum.
pub fn infer_support(margins: &[f64], tol: f64) -> Vec<usize> {
    let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = if min > 0.0 {
        min * (1.0 + tol)
    } else {
        min + tol * min.abs()
    };
    (0..margins.len()).filter(|&i| margins[i] <= cut).collect()
}

/// Gradient descent on the mean logistic loss where, every 100 steps, the
/// step size is reset to `lr / loss` (capped), approximating the
/// loss-normalized flow in which margins keep growing.
pub fn train_homogeneous(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &HomogeneousParams,
) -> Result<(MlpModel, f64)> {
    if params.hidden == 0 || params.steps == 0 {
        return Err(FlameError::config(
            "hidden",
            "hidden width and steps must be positive",
        ));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(FlameError::config(
            "learning_rate",
            "must be a positive finite number",
        ));
    }
    let dim = common_dim(inputs)?;
    check_binary_labels(labels)?;

    let mut model = MlpModel::init(dim, params.hidden, params.seed);
    let mut lr = params.learning_rate;
    for step in 0..params.steps {
        let loss = model.step(inputs, labels, lr);
        if !loss.is_finite() || model.parameters().iter().any(|v| !v.is_finite()) {
            return Err(FlameError::Divergence { epoch: step });
        }
        if (step + 1) % GROWTH_PERIOD == 0 && loss > 0.0 {
            lr = params.learning_rate * (1.0 / loss).clamp(1.0, MAX_GROWTH);
        }
    }
    let loss = model.loss(inputs, labels);
    Ok((model, loss))
}

fn direction_cosine(a: &MlpModel, b: &MlpModel) -> f64 {
    let (pa, pb) = (a.parameters(), b.parameters());
    let dot: f64 = pa.iter().zip(&pb).map(|(x, y)| x * y).sum();
    dot / (a.parameter_norm() * b.parameter_norm())
}

/// Trains on all data, infers the support set from normalized margins,
/// retrains from the same seed on the support only and compares the two.
pub fn homogeneous_gradient_flow_experiment(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &HomogeneousParams,
) -> Result<HomogeneousRunReport> {
    let (full, final_loss) = train_homogeneous(inputs, labels, params)?;
    let margins = normalized_margins(&full, inputs, labels);
    let wrong = margins.iter().filter(|&&m| m <= 0.0).count();
    if wrong > 0 {
        return Err(FlameError::NotSeparable(format!(
            "{wrong} training points misclassified after {} steps",
            params.steps
        )));
    }
    let support = infer_support(&margins, params.margin_tolerance);

    let sx: Vec<Vec<f64>> = support.iter().map(|&i| inputs[i].clone()).collect();
    let sy: Vec<bool> = support.iter().map(|&i| labels[i]).collect();
    let (reduced, support_final_loss) = train_homogeneous(&sx, &sy, params)?;

    let probes = probe_set(inputs, params.seed);
    let a: Vec<f64> = probes.iter().map(|p| full.forward_unchecked(p)).collect();
    let b: Vec<f64> = probes
        .iter()
        .map(|p| reduced.forward_unchecked(p))
        .collect();
    let support_model_min_margin = normalized_margins(&reduced, inputs, labels)
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    Ok(HomogeneousRunReport {
        normalized_margins: margins,
        inferred_support_set: support,
        direction_cosine: direction_cosine(&full, &reduced),
        prediction_agreement: sign_agreement(&a, &b),
        probe_count: probes.len(),
        final_loss,
        support_final_loss,
        support_model_min_margin,
    })
}
