use serde::{Deserialize, Serialize};

use super::kkt::{soft_margin_residuals, KktReport, SOFT_MARGIN_TOLERANCE};
use super::probes::{probe_set, sign_agreement};
use crate::classifier::{train_svm, SvmModel, SvmParams};
use crate::error::Result;

/// Full-data model versus the model retrained on its support set only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// `‖w − w′‖ / ‖w‖`, linear kernels only.
    pub weight_relative_error: Option<f64>,
    pub bias_error: f64,
    pub prediction_agreement: f64,
    pub max_score_difference: f64,
    pub probe_count: usize,
    pub support_set_before: Vec<usize>,
    /// Support of the retrained model, in original training indices.
    pub support_set_after: Vec<usize>,
    /// Set when the support set cannot be retrained on (single class).
    pub degenerate: Option<String>,
}

impl EquivalenceReport {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }
}

fn subset<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Trains on everything, extracts `S = {i : α_i > 1e-8}`, retrains on `S` with
/// identical hyperparameters and compares the two classifiers on a probe set
/// covering the data.
pub fn retrain_on_support(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &SvmParams,
) -> Result<EquivalenceReport> {
    let full = train_svm(inputs, labels, params)?;
    let support = full.support_indices.clone();
    let probes = probe_set(inputs, params.seed);

    let support_labels = subset(labels, &support);
    if support_labels.iter().all(|&l| l) || support_labels.iter().all(|&l| !l) {
        return Ok(EquivalenceReport {
            weight_relative_error: None,
            bias_error: f64::NAN,
            prediction_agreement: 0.0,
            max_score_difference: f64::NAN,
            probe_count: probes.len(),
            support_set_before: support,
            support_set_after: Vec::new(),
            degenerate: Some("support set contains a single class".into()),
        });
    }

    let reduced = train_svm(&subset(inputs, &support), &support_labels, params)?;
    Ok(compare(&full, &reduced, &support, &probes))
}

fn compare(
    full: &SvmModel,
    reduced: &SvmModel,
    support: &[usize],
    probes: &[Vec<f64>],
) -> EquivalenceReport {
    let weight_relative_error = match (full.linear_weights(), reduced.linear_weights()) {
        (Some(w), Some(v)) => {
            let diff: f64 = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let norm: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            Some(if norm > 0.0 { diff / norm } else { diff })
        }
        _ => None,
    };
    let a: Vec<f64> = probes.iter().map(|p| full.decision_unchecked(p)).collect();
    let b: Vec<f64> = probes
        .iter()
        .map(|p| reduced.decision_unchecked(p))
        .collect();
    let max_score_difference = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    EquivalenceReport {
        weight_relative_error,
        bias_error: (full.bias - reduced.bias).abs(),
        prediction_agreement: sign_agreement(&a, &b),
        max_score_difference,
        probe_count: probes.len(),
        support_set_before: support.to_vec(),
        support_set_after: reduced
            .support_indices
            .iter()
            .map(|&i| support[i])
            .collect(),
        degenerate: None,
    }
}

/// Reduced-problem KKT report and the full-problem report obtained by extending
/// its solution with `α_i = 0`, `β_i = C`, `ξ_i = 0` off the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub reduced: KktReport,
    pub extended: KktReport,
    pub support_size: usize,
    pub training_size: usize,
}

pub fn multiplier_extension_check(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &SvmParams,
) -> Result<Option<ExtensionReport>> {
    let full = train_svm(inputs, labels, params)?;
    let support = full.support_indices.clone();
    let sx = subset(inputs, &support);
    let sy = subset(labels, &support);
    if sy.iter().all(|&l| l) || sy.iter().all(|&l| !l) {
        return Ok(None);
    }
    let reduced = train_svm(&sx, &sy, params)?;
    let c = params.c;

    let reduced_alphas = reduced.full_alphas();
    let slack = |x: &[f64], l: bool| {
        (1.0 - if l { 1.0 } else { -1.0 } * reduced.decision_unchecked(x)).max(0.0)
    };
    let reduced_slacks: Vec<f64> = sx.iter().zip(&sy).map(|(x, &l)| slack(x, l)).collect();
    let reduced_report = soft_margin_residuals(
        &sx,
        &sy,
        params.kernel,
        &reduced_alphas,
        &reduced_slacks,
        reduced.bias,
        c,
        SOFT_MARGIN_TOLERANCE,
    );

    let mut alphas = vec![0.0; inputs.len()];
    let mut slacks = vec![0.0; inputs.len()];
    for (k, &i) in support.iter().enumerate() {
        alphas[i] = reduced_alphas[k];
        slacks[i] = reduced_slacks[k];
    }
    let extended = soft_margin_residuals(
        inputs,
        labels,
        params.kernel,
        &alphas,
        &slacks,
        reduced.bias,
        c,
        SOFT_MARGIN_TOLERANCE,
    );

    Ok(Some(ExtensionReport {
        reduced: reduced_report,
        extended,
        support_size: support.len(),
        training_size: inputs.len(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::KernelSpec;

    #[test]
    fn two_point_problem_is_its_own_support() {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let r = retrain_on_support(&x, &[true, false], &SvmParams::new(1e6, KernelSpec::Linear))
            .unwrap();
        assert_eq!(r.support_set_before, vec![0, 1]);
        assert_eq!(r.support_set_after, vec![0, 1]);
        assert_eq!(r.weight_relative_error, Some(0.0));
        assert_eq!(r.bias_error, 0.0);
        assert_eq!(r.prediction_agreement, 1.0);
        assert_eq!(r.probe_count, 2500);
    }
}
