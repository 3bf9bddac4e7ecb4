use serde::{Deserialize, Serialize};

use crate::classifier::{KernelSpec, SvmModel, SvmParams};
use crate::error::{FlameError, Result};

pub const HARD_MARGIN_C: f64 = 1e6;
pub const HARD_MARGIN_TOLERANCE: f64 = 1e-4;
pub const SOFT_MARGIN_TOLERANCE: f64 = 1e-3;
/// SMO stopping tolerance in the hard-margin regime. Multipliers there reach
/// tens, so the default 1e-5 leaves slackness residuals above 1e-4.
pub const HARD_MARGIN_SMO_TOLERANCE: f64 = 1e-8;

/// Solver parameters realizing the hard-margin SVM: linear kernel, `C = 1e6`.
pub fn hard_margin_params() -> SvmParams {
    SvmParams::new(HARD_MARGIN_C, KernelSpec::Linear).with_tolerance(HARD_MARGIN_SMO_TOLERANCE)
}

/// Residuals of a KKT system; `passed` iff every residual is within `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity_residual: f64,
    pub primal_violation: f64,
    pub dual_violation: f64,
    pub slackness_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl KktReport {
    fn new(stationarity: f64, primal: f64, dual: f64, slackness: f64, tolerance: f64) -> Self {
        let mut r = KktReport {
            stationarity_residual: stationarity,
            primal_violation: primal,
            dual_violation: dual,
            slackness_residual: slackness,
            tolerance,
            passed: false,
        };
        r.passed = r.passed_at(tolerance);
        r
    }

    pub fn max_residual(&self) -> f64 {
        self.stationarity_residual
            .max(self.primal_violation)
            .max(self.dual_violation)
            .max(self.slackness_residual)
    }

    pub fn passed_at(&self, tolerance: f64) -> bool {
        // NaN residuals never pass.
        self.max_residual() <= tolerance
    }
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

fn check_data(model: &SvmModel, inputs: &[Vec<f64>], labels: &[bool]) -> Result<()> {
    if inputs.len() != labels.len() || inputs.len() != model.training_size {
        return Err(FlameError::Dimension {
            expected: model.training_size,
            found: inputs.len(),
        });
    }
    for x in inputs {
        crate::numerics::check_dim(model.training_dim, x.len())?;
    }
    Ok(())
}

/// Decision values `Σ_j α_j y_j k(x_j, x_i) + b` from an explicit multiplier vector.
fn decisions(
    inputs: &[Vec<f64>],
    y: &[f64],
    alphas: &[f64],
    kernel: KernelSpec,
    bias: f64,
) -> Vec<f64> {
    inputs
        .iter()
        .map(|xi| {
            inputs
                .iter()
                .zip(y)
                .zip(alphas)
                .filter(|(_, &a)| a != 0.0)
                .map(|((xj, yj), a)| a * yj * kernel.apply(xj, xi))
                .sum::<f64>()
                + bias
        })
        .collect()
}

/// Hard-margin KKT residuals (linear kernel): stationarity `w = Σ α_i y_i x_i`,
/// `Σ α_i y_i = 0`; primal feasibility `y_i (wᵀx_i + b) ≥ 1`; dual feasibility
/// `α_i ≥ 0`; complementary slackness `α_i (y_i (wᵀx_i + b) − 1) = 0`.
///
/// The model must come from the soft-margin solver run in the hard-margin
/// regime: a multiplier at the box bound means slack was needed and the data
/// is reported as not separable.
pub fn kkt_check_hard_margin(
    model: &SvmModel,
    inputs: &[Vec<f64>],
    labels: &[bool],
) -> Result<KktReport> {
    if model.kernel != KernelSpec::Linear {
        return Err(FlameError::config(
            "kernel",
            "hard-margin KKT check requires a linear kernel",
        ));
    }
    check_data(model, inputs, labels)?;
    let alphas = model.full_alphas();
    if let Some(i) = alphas.iter().position(|&a| a >= model.c * (1.0 - 1e-9)) {
        return Err(FlameError::NotSeparable(format!(
            "multiplier {i} reached the box bound C = {:e}; slack is required",
            model.c
        )));
    }
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let dim = model.training_dim;

    let mut w = vec![0.0; dim];
    for ((x, yi), a) in inputs.iter().zip(&y).zip(&alphas) {
        for (wk, xk) in w.iter_mut().zip(x) {
            *wk += a * yi * xk;
        }
    }
    let stored = model.linear_weights().expect("linear kernel");
    let weight_gap: f64 = w.iter().zip(&stored).map(|(a, b)| (a - b) * (a - b)).sum();
    let equality: f64 = alphas.iter().zip(&y).map(|(a, yi)| a * yi).sum();
    let stationarity = (weight_gap + equality * equality).sqrt();

    let mut primal = 0.0_f64;
    let mut dual = 0.0_f64;
    let mut slackness = 0.0_f64;
    for ((x, yi), a) in inputs.iter().zip(&y).zip(&alphas) {
        let margin = yi * (crate::numerics::dot(&w, x) + model.bias);
        primal = primal.max(1.0 - margin);
        dual = dual.max(-a);
        slackness = slackness.max((a * (margin - 1.0)).abs());
    }
    Ok(KktReport::new(
        stationarity,
        primal.max(0.0),
        dual.max(0.0),
        slackness,
        HARD_MARGIN_TOLERANCE,
    ))
}

/// Soft-margin KKT residuals for explicit multipliers `α`, slacks `ξ` and bias,
/// with `β = C − α`.
///
/// Residuals are expressed for the problem divided by `max(1, C)`, whose
/// multipliers `α / max(1, C)` and `β / max(1, C)` stay bounded as `C` grows.
#[allow(clippy::too_many_arguments)]
pub fn soft_margin_residuals(
    inputs: &[Vec<f64>],
    labels: &[bool],
    kernel: KernelSpec,
    alphas: &[f64],
    slacks: &[f64],
    bias: f64,
    c: f64,
    tolerance: f64,
) -> KktReport {
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let f = decisions(inputs, &y, alphas, kernel, bias);
    let scale = c.max(1.0);

    let equality: f64 = alphas.iter().zip(&y).map(|(a, yi)| a * yi).sum();
    let stationarity = equality.abs() / scale;

    let mut primal = 0.0_f64;
    let mut dual = 0.0_f64;
    let mut slackness = 0.0_f64;
    for i in 0..inputs.len() {
        let (a, xi) = (alphas[i], slacks[i]);
        let beta = c - a;
        let margin = y[i] * f[i];
        primal = primal.max(1.0 - xi - margin).max(-xi);
        dual = dual.max(-a / scale).max(-beta / scale);
        slackness = slackness
            .max((a * (margin - 1.0 + xi)).abs() / scale)
            .max((beta * xi).abs() / scale);
    }
    KktReport::new(
        stationarity,
        primal.max(0.0),
        dual.max(0.0),
        slackness,
        tolerance,
    )
}

/// Soft-margin KKT check of a trained model: `ξ_i = max(0, 1 − y_i f(x_i))`,
/// `β_i = C − α_i`.
pub fn kkt_check_soft_margin(
    model: &SvmModel,
    inputs: &[Vec<f64>],
    labels: &[bool],
    c: f64,
) -> Result<KktReport> {
    check_data(model, inputs, labels)?;
    let alphas = model.full_alphas();
    let slacks: Vec<f64> = inputs
        .iter()
        .zip(labels)
        .map(|(x, &l)| (1.0 - sign(l) * model.decision_unchecked(x)).max(0.0))
        .collect();
    Ok(soft_margin_residuals(
        inputs,
        labels,
        model.kernel,
        &alphas,
        &slacks,
        model.bias,
        c,
        SOFT_MARGIN_TOLERANCE,
    ))
}
