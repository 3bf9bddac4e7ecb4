//! Seeded batteries of experiments with pass/fail summaries.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{overlapping_gaussians, separable, two_blobs, Dataset, SEPARABLE_GAP};
use super::equivalence::{
    multiplier_extension_check, retrain_on_support, EquivalenceReport, ExtensionReport,
};
use super::homogeneous::{
    homogeneous_gradient_flow_experiment, HomogeneousParams, HomogeneousRunReport,
};
use super::kkt::{
    hard_margin_params, kkt_check_hard_margin, kkt_check_soft_margin, KktReport,
    SOFT_MARGIN_TOLERANCE,
};
use crate::classifier::{default_gamma, train_svm, KernelSpec, MlpModel, SvmParams};
use crate::error::Result;

pub const HARD_MARGIN_WEIGHT_TOLERANCE: f64 = 1e-4;
pub const HARD_MARGIN_BIAS_TOLERANCE: f64 = 1e-4;
pub const SOFT_MARGIN_AGREEMENT: f64 = 0.999;
pub const HOMOGENEOUS_AGREEMENT: f64 = 0.99;
pub const HOMOGENEITY_TOLERANCE: f64 = 1e-10;
pub const SOFT_MARGIN_CS: [f64; 3] = [0.5, 1.0, 10.0];

/// Instance counts and sizes for every suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuitePlan {
    pub hard_instances: usize,
    pub hard_points: usize,
    pub soft_instances: usize,
    pub soft_points: usize,
    pub homogeneous_instances: usize,
    pub homogeneous_points: usize,
    pub homogeneous_steps: usize,
    pub base_seed: u64,
}

impl SuitePlan {
    pub fn full() -> Self {
        SuitePlan {
            hard_instances: 100,
            hard_points: 60,
            soft_instances: 50,
            soft_points: 80,
            homogeneous_instances: 5,
            homogeneous_points: 40,
            homogeneous_steps: 50_000,
            base_seed: 0,
        }
    }

    pub fn quick() -> Self {
        SuitePlan {
            hard_instances: 10,
            soft_instances: 5,
            homogeneous_instances: 1,
            homogeneous_steps: 20_000,
            ..Self::full()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult<T> {
    pub seed: u64,
    pub passed: bool,
    pub report: Option<T>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport<T> {
    pub suite: String,
    pub passed: bool,
    pub instances_passed: usize,
    pub instances_total: usize,
    pub elapsed_seconds: f64,
    pub instances: Vec<InstanceResult<T>>,
}

/// One row of the pass/fail table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub passed: bool,
    pub instances_passed: usize,
    pub instances_total: usize,
    pub elapsed_seconds: f64,
}

impl<T> SuiteReport<T> {
    pub fn summary(&self) -> SuiteSummary {
        SuiteSummary {
            suite: self.suite.clone(),
            passed: self.passed,
            instances_passed: self.instances_passed,
            instances_total: self.instances_total,
            elapsed_seconds: self.elapsed_seconds,
        }
    }
}

fn run_suite<T, F>(name: &str, seeds: Vec<u64>, job: F) -> SuiteReport<T>
where
    T: Send,
    F: Fn(u64) -> Result<(bool, T)> + Sync,
{
    let start = Instant::now();
    let instances: Vec<InstanceResult<T>> = seeds
        .into_par_iter()
        .map(|seed| match job(seed) {
            Ok((passed, report)) => InstanceResult {
                seed,
                passed,
                report: Some(report),
                error: None,
            },
            Err(e) => InstanceResult {
                seed,
                passed: false,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let instances_passed = instances.iter().filter(|r| r.passed).count();
    let instances_total = instances.len();
    SuiteReport {
        suite: name.to_string(),
        passed: instances_passed == instances_total && instances_total > 0,
        instances_passed,
        instances_total,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        instances,
    }
}

fn seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base + i).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardMarginInstance {
    pub kkt: KktReport,
    pub equivalence: EquivalenceReport,
}

/// Separable linear instances at `C = 1e6`: the KKT system must hold and
/// weights, bias and probe-grid signs must survive retraining on the support
/// vectors.
pub fn hard_margin_suite(plan: &SuitePlan) -> SuiteReport<HardMarginInstance> {
    run_suite(
        "hard-margin-support",
        seeds(plan.base_seed, plan.hard_instances),
        |seed| {
            let Dataset { inputs, labels } = separable(seed, plan.hard_points, SEPARABLE_GAP);
            let params = hard_margin_params().with_seed(seed);
            let model = train_svm(&inputs, &labels, &params)?;
            let kkt = kkt_check_hard_margin(&model, &inputs, &labels)?;
            let equivalence = retrain_on_support(&inputs, &labels, &params)?;
            let passed = kkt.passed
                && !equivalence.is_degenerate()
                && equivalence
                    .weight_relative_error
                    .is_some_and(|e| e <= HARD_MARGIN_WEIGHT_TOLERANCE)
                && equivalence.bias_error <= HARD_MARGIN_BIAS_TOLERANCE
                && equivalence.prediction_agreement == 1.0;
            Ok((passed, HardMarginInstance { kkt, equivalence }))
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftMarginRun {
    pub c: f64,
    pub gamma: f64,
    pub kkt: KktReport,
    pub equivalence: EquivalenceReport,
}

fn rbf_params(inputs: &[Vec<f64>], c: f64, seed: u64) -> (f64, SvmParams) {
    let gamma = default_gamma(inputs);
    (
        gamma,
        SvmParams::new(c, KernelSpec::Rbf { gamma }).with_seed(seed),
    )
}

/// Overlapping Gaussians with an rbf kernel at every `C` in {0.5, 1, 10}.
pub fn soft_margin_suite(plan: &SuitePlan) -> SuiteReport<Vec<SoftMarginRun>> {
    run_suite(
        "soft-margin-support",
        seeds(plan.base_seed, plan.soft_instances),
        |seed| {
            let Dataset { inputs, labels } = overlapping_gaussians(seed, plan.soft_points);
            let mut runs = Vec::new();
            let mut passed = true;
            for c in SOFT_MARGIN_CS {
                let (gamma, params) = rbf_params(&inputs, c, seed);
                let model = train_svm(&inputs, &labels, &params)?;
                let kkt = kkt_check_soft_margin(&model, &inputs, &labels, c)?;
                let equivalence = retrain_on_support(&inputs, &labels, &params)?;
                passed &= kkt.passed
                    && !equivalence.is_degenerate()
                    && equivalence.prediction_agreement >= SOFT_MARGIN_AGREEMENT;
                runs.push(SoftMarginRun {
                    c,
                    gamma,
                    kkt,
                    equivalence,
                });
            }
            Ok((passed, runs))
        },
    )
}

/// The reduced solution, padded with zero multipliers, must satisfy the full
/// soft-margin KKT system whenever it satisfies the reduced one.
pub fn multiplier_extension_suite(plan: &SuitePlan) -> SuiteReport<Vec<ExtensionReport>> {
    run_suite(
        "multiplier-extension",
        seeds(plan.base_seed, plan.soft_instances),
        |seed| {
            let Dataset { inputs, labels } = overlapping_gaussians(seed, plan.soft_points);
            let mut reports = Vec::new();
            let mut passed = true;
            for c in SOFT_MARGIN_CS {
                let (_, params) = rbf_params(&inputs, c, seed);
                match multiplier_extension_check(&inputs, &labels, &params)? {
                    Some(r) => {
                        passed &= !r.reduced.passed_at(SOFT_MARGIN_TOLERANCE)
                            || r.extended.passed_at(SOFT_MARGIN_TOLERANCE);
                        reports.push(r);
                    }
                    None => passed = false,
                }
            }
            Ok((passed, reports))
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousInstance {
    pub homogeneity_error: f64,
    pub run: HomogeneousRunReport,
}

/// Largest relative deviation `|Φ(cθ;x) − c²Φ(θ;x)| / |c²Φ(θ;x)|` over the
/// inputs and `c ∈ {0.5, 2, 10}`.
pub fn homogeneity_error(model: &MlpModel, inputs: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for c in [0.5, 2.0, 10.0] {
        let scaled = model.scaled(c);
        for x in inputs {
            let expect = c * c * model.forward_unchecked(x);
            let got = scaled.forward_unchecked(x);
            let err = (got - expect).abs();
            worst = worst.max(if expect != 0.0 {
                err / expect.abs()
            } else {
                err
            });
        }
    }
    worst
}

/// Two-blob data with the bias-free ReLU network.
pub fn homogeneous_suite(plan: &SuitePlan) -> SuiteReport<HomogeneousInstance> {
    run_suite(
        "homogeneous-network",
        seeds(plan.base_seed, plan.homogeneous_instances),
        |seed| {
            let Dataset { inputs, labels } = two_blobs(seed, plan.homogeneous_points);
            let params = HomogeneousParams {
                steps: plan.homogeneous_steps,
                seed,
                ..HomogeneousParams::default()
            };
            let run = homogeneous_gradient_flow_experiment(&inputs, &labels, &params)?;
            let homogeneity_error =
                homogeneity_error(&MlpModel::init(2, params.hidden, seed), &inputs);
            let passed = homogeneity_error <= HOMOGENEITY_TOLERANCE
                && run.prediction_agreement >= HOMOGENEOUS_AGREEMENT
                && run.normalized_margins.iter().all(|m| m.is_finite())
                && !run.inferred_support_set.is_empty();
            Ok((
                passed,
                HomogeneousInstance {
                    homogeneity_error,
                    run,
                },
            ))
        },
    )
}
