use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::benchmark::{generate_synthetic_benchmark, SyntheticBenchmarkSpec};
use super::eval::{evaluate, EvalReport, ScoredItem};
use super::oracle::{GroundTruthOracle, LabelOracle};
use crate::classifier::{
    config_hash, train_mlp, train_svm, MlpParams, ModelFile, SvmParams, TrainedModel,
};
use crate::embedding_io::{save_labels, EmbeddingRecord, GroundTruth, LabelSet};
use crate::error::{FlameError, Result};
use crate::sampler::{
    augment_pool, build_training_set, select_shots, AugmentedEmbedding, ClassifierKind,
    FlameConfig, LabeledShot, ShotSelection,
};

/// Augmented embeddings of a pool against a query, in pool order.
pub fn augment_records(pool: &[EmbeddingRecord], query: &[f64]) -> Result<Vec<AugmentedEmbedding>> {
    if pool.is_empty() {
        return Err(FlameError::EmptyPool);
    }
    let vectors: Vec<Vec<f64>> = pool.iter().map(|r| r.vector_f64()).collect();
    augment_pool(&vectors, query)
}

/// Shot selection plus the pool ids of the selected shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    pub shot_ids: Vec<String>,
    pub selection: ShotSelection,
}

pub fn sample(
    pool: &[EmbeddingRecord],
    augmented: &[AugmentedEmbedding],
    config: &FlameConfig,
) -> Result<SampleOutput> {
    let selection = select_shots(augmented, config)?;
    let shot_ids = selection
        .shots
        .iter()
        .map(|s| pool[s.pool_index].id.clone())
        .collect();
    Ok(SampleOutput {
        shot_ids,
        selection,
    })
}

/// Trains the configured classifier on labeled shots.
///
/// Shots are ordered by pool id before oversampling and training, so the
/// model does not depend on the order in which labels arrived.
pub fn train_from_labels(
    pool: &[EmbeddingRecord],
    augmented: &[AugmentedEmbedding],
    shot_ids: &[String],
    labels: &LabelSet,
    config: &FlameConfig,
) -> Result<ModelFile> {
    config.validate()?;
    labels.check_ids(shot_ids)?;
    let index: std::collections::HashMap<&str, usize> = pool
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();

    let mut labeled = Vec::with_capacity(labels.len());
    for (id, entry) in labels.iter() {
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| FlameError::UnknownShot(id.clone()))?;
        labeled.push(LabeledShot::real(
            i,
            augmented[i].augmented().to_vec(),
            entry.label,
        ));
    }
    let training = build_training_set(&labeled, config)?;
    let inputs: Vec<Vec<f64>> = training.iter().map(|s| s.augmented.clone()).collect();
    let targets: Vec<bool> = training.iter().map(|s| s.label).collect();

    let cc = &config.classifier;
    let model = match cc.kind {
        ClassifierKind::Svm => {
            let params = SvmParams::new(cc.c, cc.resolve_kernel(&inputs))
                .with_tolerance(cc.svm_tolerance)
                .with_seed(config.seed);
            TrainedModel::Svm(train_svm(&inputs, &targets, &params)?)
        }
        ClassifierKind::Mlp => {
            let params = MlpParams {
                hidden: cc.mlp_hidden,
                epochs: cc.mlp_epochs,
                learning_rate: cc.mlp_learning_rate,
                seed: config.seed,
            };
            TrainedModel::Mlp(train_mlp(&inputs, &targets, &params)?.0)
        }
    };
    ModelFile::new(model, config_hash(config)?, &inputs)
}

/// Scores every pool record with ground truth and reports AP for the model
/// and for the cosine-similarity baseline.
pub fn evaluate_model(
    model: &ModelFile,
    pool: &[EmbeddingRecord],
    augmented: &[AugmentedEmbedding],
    truth: &GroundTruth,
) -> Result<EvalReport> {
    let scored: Vec<usize> = (0..pool.len())
        .filter(|&i| truth.get(&pool[i].id).is_some())
        .collect();
    if scored.len() < pool.len() {
        log::warn!(
            "{} pool records lack ground truth and are not evaluated",
            pool.len() - scored.len()
        );
    }
    let inputs: Vec<&[f64]> = scored.iter().map(|&i| augmented[i].augmented()).collect();
    let scores = model.model.decision_batch(&inputs)?;

    let item = |i: usize, score: f64| ScoredItem {
        id: pool[i].id.clone(),
        score,
        label: truth.get(&pool[i].id).unwrap(),
    };
    let items: Vec<ScoredItem> = scored
        .iter()
        .zip(&scores)
        .map(|(&i, &s)| item(i, s))
        .collect();
    let baseline: Vec<ScoredItem> = scored
        .iter()
        .map(|&i| item(i, augmented[i].similarity()))
        .collect();

    let mut report = evaluate(&items)?;
    report.baseline_ap = Some(evaluate(&baseline)?.average_precision);
    Ok(report)
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlameRun {
    pub sample: SampleOutput,
    pub labels: LabelSet,
    pub model: ModelFile,
    pub report: EvalReport,
    /// Training plus evaluation, excluding annotation.
    pub post_labeling_seconds: f64,
}

/// Augment, select, annotate, oversample, train and evaluate.
///
/// If the oracle leaves shots unlabeled, the partial labels are written to
/// `partial_labels` (when given) and `AnnotationIncomplete` is returned.
pub fn run_flame(
    pool: &[EmbeddingRecord],
    query: &[f64],
    config: &FlameConfig,
    oracle: &mut dyn LabelOracle,
    partial_labels: Option<&Path>,
) -> Result<FlameRun> {
    config.validate()?;
    let augmented = augment_records(pool, query)?;
    let sample = sample(pool, &augmented, config)?;

    let labels = oracle.annotate(&sample.shot_ids)?;
    labels.check_ids(&sample.shot_ids)?;
    if labels.len() < sample.shot_ids.len() {
        if let Some(path) = partial_labels {
            save_labels(path, &labels, &sample.shot_ids)?;
        }
        return Err(FlameError::AnnotationIncomplete {
            labeled: labels.len(),
            expected: sample.shot_ids.len(),
        });
    }

    let start = Instant::now();
    let model = train_from_labels(pool, &augmented, &sample.shot_ids, &labels, config)?;
    let report = evaluate_model(&model, pool, &augmented, &GroundTruth::from_pool(pool))?;
    let post_labeling_seconds = start.elapsed().as_secs_f64();

    Ok(FlameRun {
        sample,
        labels,
        model,
        report,
        post_labeling_seconds,
    })
}

/// Result of one synthetic benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: SyntheticBenchmarkSpec,
    pub ap_flame: f64,
    pub ap_baseline: f64,
    pub gain: f64,
    pub effective_k: usize,
    pub positive_shots: usize,
    pub post_labeling_seconds: f64,
}

/// Generates the benchmark for `spec` and runs FLAME on it with the
/// ground-truth oracle.
pub fn run_benchmark(spec: &SyntheticBenchmarkSpec, config: &FlameConfig) -> Result<BenchReport> {
    let bench = generate_synthetic_benchmark(spec)?;
    let mut oracle = GroundTruthOracle::new(GroundTruth::from_pool(&bench.pool));
    let run = run_flame(&bench.pool, &bench.query, config, &mut oracle, None)?;
    let ap_baseline = run.report.baseline_ap.expect("baseline computed");
    Ok(BenchReport {
        spec: *spec,
        ap_flame: run.report.average_precision,
        ap_baseline,
        gain: run.report.average_precision - ap_baseline,
        effective_k: run.sample.selection.effective_k,
        positive_shots: run.labels.iter().filter(|(_, e)| e.label).count(),
        post_labeling_seconds: run.post_labeling_seconds,
    })
}
