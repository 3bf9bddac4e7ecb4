//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Tolerances are pinned here rather than imported, so loosening a library
//! constant cannot change the verdict.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use flame_core::classifier::{train_mlp, train_svm, KernelSpec, MlpModel, MlpParams, SvmParams};
use flame_core::embedding_io::{load_pool, GroundTruth};
use flame_core::numerics::{fit_pca, scott_bandwidth, KdeModel};
use flame_core::pipeline::{evaluate, run_benchmark, ScoredItem, SyntheticBenchmarkSpec};
use flame_core::sampler::{build_training_set, smote, FlameConfig, LabeledShot};
use flame_core::support_theory::data::{overlapping_gaussians, separable, SEPARABLE_GAP};
use flame_core::support_theory::{
    hard_margin_suite, homogeneous_suite, multiplier_extension_suite, soft_margin_suite, SuitePlan,
};
use flame_oracles::{
    brute_density, central_differences, covariance, definitional_ap, hard_margin_plane,
    jacobi_eigen, segment_residual,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};
use tower::ServiceExt;

const HARD_INSTANCES: usize = 100;
const HARD_WEIGHT_TOL: f64 = 1e-4;
const HARD_BIAS_TOL: f64 = 1e-4;
const HARD_SECONDS: f64 = 30.0;
const SOFT_INSTANCES: usize = 50;
const SOFT_KKT_TOL: f64 = 1e-3;
const SOFT_AGREEMENT: f64 = 0.999;
const HOMOGENEITY_TOL: f64 = 1e-10;
const HOMOGENEOUS_AGREEMENT: f64 = 0.99;
const KDE_TOL: f64 = 1e-12;
const PCA_TOL: f64 = 1e-8;
const SMO_QP_TOL: f64 = 1e-3;
const MLP_FD_TOL: f64 = 1e-4;
const SMOTE_RESIDUAL_TOL: f64 = 1e-10;
const BENCH_SEEDS: u64 = 20;
const BENCH_MIN_WINS: usize = 18;
const BENCH_MIN_GAIN: f64 = 0.15;
const BENCH_SECONDS: f64 = 60.0;

struct Gate {
    failures: usize,
}

impl Gate {
    fn check(&mut self, name: &str, passed: bool, detail: String) {
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("{verdict}  {name:<38} {detail}");
        if !passed {
            self.failures += 1;
        }
    }
}

fn normal_points(rng: &mut ChaCha8Rng, n: usize, scales: &[f64], shift: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            scales
                .iter()
                .map(|s| {
                    let z: f64 = StandardNormal.sample(rng);
                    s * z + shift
                })
                .collect()
        })
        .collect()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn hard_margin(gate: &mut Gate) {
    let start = Instant::now();
    let report = hard_margin_suite(&SuitePlan::full());
    let seconds = start.elapsed().as_secs_f64();
    let (mut w_err, mut b_err, mut agreement, mut good) = (0.0_f64, 0.0_f64, 1.0_f64, 0);
    for inst in &report.instances {
        let Some(r) = &inst.report else { continue };
        let eq = &r.equivalence;
        let w = eq.weight_relative_error.unwrap_or(f64::INFINITY);
        w_err = w_err.max(w);
        b_err = b_err.max(eq.bias_error);
        agreement = agreement.min(eq.prediction_agreement);
        if r.kkt.passed
            && eq.degenerate.is_none()
            && w <= HARD_WEIGHT_TOL
            && eq.bias_error <= HARD_BIAS_TOL
            && eq.prediction_agreement == 1.0
            && eq.probe_count == 2500
        {
            good += 1;
        }
    }
    gate.check(
        "hard-margin support retraining",
        good == HARD_INSTANCES
            && report.instances.len() == HARD_INSTANCES
            && seconds < HARD_SECONDS,
        format!(
            "{good}/{HARD_INSTANCES} instances, max |dw|/|w| {w_err:.1e}, max |db| {b_err:.1e}, \
             min agreement {agreement}, {seconds:.2}s (< {HARD_SECONDS}s)"
        ),
    );
}

fn soft_margin(gate: &mut Gate) {
    let plan = SuitePlan::full();
    let report = soft_margin_suite(&plan);
    let (mut residual, mut agreement, mut good) = (0.0_f64, 1.0_f64, 0);
    for inst in &report.instances {
        let Some(runs) = &inst.report else { continue };
        let mut ok = runs.len() == 3;
        for run in runs {
            residual = residual.max(run.kkt.max_residual());
            agreement = agreement.min(run.equivalence.prediction_agreement);
            ok &= run.kkt.passed_at(SOFT_KKT_TOL)
                && run.equivalence.degenerate.is_none()
                && run.equivalence.prediction_agreement >= SOFT_AGREEMENT;
        }
        good += ok as usize;
    }
    gate.check(
        "soft-margin support retraining",
        good == SOFT_INSTANCES && report.instances.len() == SOFT_INSTANCES,
        format!(
            "{good}/{SOFT_INSTANCES} instances x C in {{0.5,1,10}}, max KKT residual {residual:.1e} \
             (<= {SOFT_KKT_TOL:e}), min agreement {agreement:.4} (>= {SOFT_AGREEMENT})"
        ),
    );
    let ext = multiplier_extension_suite(&plan);
    gate.check(
        "zero-padded multipliers stay optimal",
        ext.passed && ext.instances_passed == SOFT_INSTANCES,
        format!("{}/{} instances", ext.instances_passed, ext.instances_total),
    );
}

fn homogeneous(gate: &mut Gate) {
    let report = homogeneous_suite(&SuitePlan::full());
    let (mut h_err, mut agreement, mut good) = (0.0_f64, 1.0_f64, 0);
    for inst in &report.instances {
        let Some(r) = &inst.report else { continue };
        h_err = h_err.max(r.homogeneity_error);
        agreement = agreement.min(r.run.prediction_agreement);
        if r.homogeneity_error <= HOMOGENEITY_TOL
            && r.run.prediction_agreement >= HOMOGENEOUS_AGREEMENT
        {
            good += 1;
        }
    }
    let n = report.instances.len();
    gate.check(
        "homogeneous network support",
        good == n && n > 0,
        format!(
            "{good}/{n} instances, max homogeneity error {h_err:.1e} (<= {HOMOGENEITY_TOL:e}), \
             min agreement {agreement:.4} (>= {HOMOGENEOUS_AGREEMENT})"
        ),
    );
}

fn kde(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for dim in 1..=3 {
        let samples = normal_points(&mut rng, 300, &vec![1.0; dim], 0.0);
        let h = scott_bandwidth(&samples).unwrap();
        let kde = KdeModel::fit(samples.clone(), h).unwrap();
        for q in normal_points(&mut rng, 100, &vec![1.5; dim], 0.0) {
            worst = worst.max(relative(
                kde.density(&q).unwrap(),
                brute_density(&samples, h, &q),
            ));
        }
    }
    gate.check(
        "KDE vs direct sum",
        worst <= KDE_TOL,
        format!("max relative error {worst:.1e} (<= {KDE_TOL:e})"),
    );
}

fn pca(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let x = normal_points(&mut rng, 50, &[3.0, 2.5, 2.0, 1.5, 1.0, 0.7, 0.4, 0.2], 0.0);
    let (values, vectors) = jacobi_eigen(covariance(&x));
    let pca = fit_pca(&x, 3).unwrap();
    let mut worst = 0.0_f64;
    for c in 0..3 {
        let (got, want) = (&pca.components[c], &vectors[c]);
        let sign = got
            .iter()
            .zip(want)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .signum();
        for (a, b) in got.iter().zip(want) {
            worst = worst.max((a - sign * b).abs());
        }
        worst = worst.max(relative(pca.explained_variance[c], values[c]));
    }
    gate.check(
        "PCA vs Jacobi eigensolver",
        worst <= PCA_TOL,
        format!("50x8, 3 components, max deviation {worst:.1e} (<= {PCA_TOL:e})"),
    );
}

fn smo_vs_qp(gate: &mut Gate) {
    let mut worst = 0.0_f64;
    for seed in 0..5 {
        let data = separable(900 + seed, 60, SEPARABLE_GAP);
        let y: Vec<f64> = data
            .labels
            .iter()
            .map(|&l| if l { 1.0 } else { -1.0 })
            .collect();
        let (w, b) = hard_margin_plane(&data.inputs, &y, 1e6);
        let model = train_svm(
            &data.inputs,
            &data.labels,
            &SvmParams::new(1e6, KernelSpec::Linear),
        )
        .unwrap();
        let got = model.linear_weights().unwrap();
        let diff: f64 = got
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
        worst = worst.max((model.bias - b).abs() / b.abs().max(1.0));
    }
    gate.check(
        "SMO vs dense dual QP",
        worst <= SMO_QP_TOL,
        format!("5 instances, max relative (w, b) error {worst:.1e} (<= {SMO_QP_TOL:e})"),
    );
}

fn ap(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut mismatches = 0;
    let lists = 200;
    for _ in 0..lists {
        let n = rng.random_range(1..120);
        let mut items: Vec<ScoredItem> = (0..n)
            .map(|i| ScoredItem {
                id: format!("r{i:03}"),
                score: (rng.random::<f64>() * 8.0).round() / 8.0,
                label: rng.random_bool(0.3),
            })
            .collect();
        items[0].label = true;
        let tuples: Vec<(String, f64, bool)> = items
            .iter()
            .map(|i| (i.id.clone(), i.score, i.label))
            .collect();
        if evaluate(&items).unwrap().average_precision != definitional_ap(&tuples) {
            mismatches += 1;
        }
    }
    gate.check(
        "AP vs definition",
        mismatches == 0,
        format!("{mismatches}/{lists} tied-score lists differ (exact equality)"),
    );
}

fn mlp_gradient(gate: &mut Gate) {
    let data = overlapping_gaussians(3, 20);
    let params = MlpParams {
        hidden: 6,
        epochs: 50,
        learning_rate: 0.1,
        seed: 9,
    };
    let (trained, _) = train_mlp(&data.inputs, &data.labels, &params).unwrap();
    let mut model = MlpModel::init(2, 6, 9);
    model.set_parameters(&trained.parameters());
    let (_, grad) = model.loss_and_gradient(&data.inputs, &data.labels);
    let analytic: Vec<f64> = grad.w1.iter().chain(&grad.w2).copied().collect();
    let numeric = central_differences(
        |p| {
            let mut m = model.clone();
            m.set_parameters(p);
            m.loss(&data.inputs, &data.labels)
        },
        &model.parameters(),
        1e-5,
    );
    let worst = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max);
    gate.check(
        "MLP gradient vs finite differences",
        worst <= MLP_FD_TOL,
        format!(
            "{} parameters, max relative error {worst:.1e} (<= {MLP_FD_TOL:e})",
            analytic.len()
        ),
    );
}

fn labeled(positives: usize, negatives: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledShot> {
    let pos = normal_points(rng, positives, &[1.0; 4], 1.0);
    let neg = normal_points(rng, negatives, &[1.0; 4], -1.0);
    pos.into_iter()
        .map(|x| (x, true))
        .chain(neg.into_iter().map(|x| (x, false)))
        .enumerate()
        .map(|(i, (x, l))| LabeledShot::real(i, x, l))
        .collect()
}

fn smote_checks(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let data = labeled(10, 40, &mut rng);
    let minority: Vec<Vec<f64>> = data[..10].iter().map(|s| s.augmented.clone()).collect();
    let synthetic = smote(&data, 5, 500, 1e-3, 4).unwrap();
    let worst = synthetic
        .iter()
        .map(|s| segment_residual(&s.augmented, &minority))
        .fold(0.0, f64::max);
    let labels_ok = synthetic.len() == 500 && synthetic.iter().all(|s| s.label && s.synthetic);
    gate.check(
        "SMOTE points on minority segments",
        labels_ok && worst <= SMOTE_RESIDUAL_TOL,
        format!("500 synthetics, max residual {worst:.1e} (<= {SMOTE_RESIDUAL_TOL:e})"),
    );

    let cfg = FlameConfig::default();
    let (mut cases, mut bad) = (0, 0);
    for p in 1..=29 {
        let n = 30 - p;
        let data = labeled(p, n, &mut rng);
        let out = build_training_set(&data, &cfg).unwrap();
        let count = |l: bool| out.iter().filter(|s| s.label == l).count();
        let rho = p.max(n) as f64 / p.min(n) as f64;
        let ok = if rho > cfg.imbalance_threshold {
            count(true) == p.max(n) && count(false) == p.max(n) && out[..30] == data[..]
        } else {
            out == data
        };
        cases += 1;
        bad += (!ok) as usize;
    }
    gate.check(
        "training set equalizes or is identity",
        bad == 0,
        format!(
            "{}/{cases} class splits of 30 shots, threshold {}",
            cases - bad,
            cfg.imbalance_threshold
        ),
    );
}

fn benchmark(gate: &mut Gate) {
    let base = SyntheticBenchmarkSpec::default();
    let config = FlameConfig::default();
    let shape_ok = base.pool_size == 5000 && base.dim == 64 && config.shots == 30;
    let (mut wins, mut min_gain, mut slowest) = (0, f64::INFINITY, 0.0_f64);
    for seed in 0..BENCH_SEEDS {
        let spec = SyntheticBenchmarkSpec { seed, ..base };
        let r = run_benchmark(
            &spec,
            &FlameConfig {
                seed,
                ..config.clone()
            },
        )
        .unwrap();
        min_gain = min_gain.min(r.gain);
        slowest = slowest.max(r.post_labeling_seconds);
        if r.ap_flame >= r.ap_baseline + BENCH_MIN_GAIN {
            wins += 1;
        }
    }
    gate.check(
        "synthetic benchmark gain",
        shape_ok && wins >= BENCH_MIN_WINS,
        format!(
            "n=5000 d=64 K=30: {wins}/{BENCH_SEEDS} seeds gain >= {BENCH_MIN_GAIN} \
             (need {BENCH_MIN_WINS}), min gain {min_gain:.3}"
        ),
    );
    gate.check(
        "post-labeling time",
        slowest < BENCH_SECONDS,
        format!("slowest {slowest:.3}s (< {BENCH_SECONDS}s)"),
    );
}

fn flame(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_flame"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// bench → sample → label → train in `dir`; returns (shots.json, model.json).
fn cli_run(dir: &Path) -> Option<(Vec<u8>, Vec<u8>)> {
    let steps: [&[&str]; 4] = [
        &["bench", "--write-pool", "--format", "binary", "--seed", "5"],
        &[
            "sample",
            "--seed",
            "5",
            "--pool",
            "pool.bin",
            "--query",
            "query.json",
        ],
        &[
            "label",
            "--shots",
            "shots.json",
            "--ground-truth",
            "pool.bin",
        ],
        &[
            "train",
            "--seed",
            "5",
            "--pool",
            "pool.bin",
            "--query",
            "query.json",
            "--shots",
            "shots.json",
            "--labels",
            "labels.csv",
        ],
    ];
    for args in steps {
        if !flame(dir, args) {
            return None;
        }
    }
    Some((
        std::fs::read(dir.join("shots.json")).ok()?,
        std::fs::read(dir.join("model.json")).ok()?,
    ))
}

async fn call(
    app: &axum::Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

/// The same session through the in-process HTTP service; returns (shot ids, model bytes).
async fn service_run(dir: &Path) -> Option<(Vec<String>, Vec<u8>)> {
    let state = flame_service::AppState::new(dir.join("data"), None).ok()?;
    let app = flame_service::router(state);
    let pool = dir.join("pool.bin");
    let body = json!({
        "id": "gate",
        "pool": pool,
        "query": dir.join("query.json"),
        "config": { "seed": 5 },
    });
    let (status, _) = call(&app, "POST", "/sessions", Some(body)).await;
    if status != StatusCode::CREATED {
        return None;
    }
    let (_, list) = call(&app, "GET", "/sessions/gate/candidates", None).await;
    let ids: Vec<String> = list["candidates"]
        .as_array()?
        .iter()
        .filter_map(|c| c["shot_id"].as_str().map(String::from))
        .collect();
    let truth = GroundTruth::from_pool(&load_pool(&pool).ok()?);
    let labels: Vec<Value> = ids
        .iter()
        .map(|s| json!({ "shot_id": s, "label": truth.get(s) }))
        .collect();
    call(
        &app,
        "POST",
        "/sessions/gate/labels",
        Some(json!({ "labels": labels })),
    )
    .await;
    let (status, _) = call(&app, "POST", "/sessions/gate/train", None).await;
    if status != StatusCode::OK {
        return None;
    }
    Some((ids, std::fs::read(dir.join("data/gate.model.json")).ok()?))
}

fn determinism(gate: &mut Gate) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ra, rb) = (cli_run(a.path()), cli_run(b.path()));
    let same_cli = ra.is_some() && ra == rb;
    gate.check(
        "CLI runs byte-identical",
        same_cli,
        "shots.json and model.json from two fresh directories".to_string(),
    );

    let runtime = tokio::runtime::Builder::new_current_thread()
        .build()
        .unwrap();
    let service = runtime.block_on(service_run(a.path()));
    let cli_shots: Option<Vec<String>> = ra.as_ref().and_then(|(shots, _)| {
        let v: Value = serde_json::from_slice(shots).ok()?;
        serde_json::from_value(v["shot_ids"].clone()).ok()
    });
    let matches = match (&ra, &service, &cli_shots) {
        (Some((_, model)), Some((ids, service_model)), Some(shots)) => {
            ids == shots && model == service_model
        }
        _ => false,
    };
    gate.check(
        "CLI and service agree",
        matches,
        "identical shot ids and model file bytes".to_string(),
    );
}

fn main() {
    let mut gate = Gate { failures: 0 };
    hard_margin(&mut gate);
    soft_margin(&mut gate);
    homogeneous(&mut gate);
    kde(&mut gate);
    pca(&mut gate);
    smo_vs_qp(&mut gate);
    ap(&mut gate);
    mlp_gradient(&mut gate);
    smote_checks(&mut gate);
    benchmark(&mut gate);
    determinism(&mut gate);
    if gate.failures > 0 {
        println!("{} criteria failed", gate.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
