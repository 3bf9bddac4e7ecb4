use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use flame_core::classifier::ModelFile;
use flame_core::embedding_io::{
    load_labels_for, load_pool, load_query, save_labels, save_pool, save_query, GroundTruth,
    LabelEntry, LabelSet, PoolFormat,
};
use flame_core::pipeline::{
    augment_records, evaluate_model, generate_synthetic_benchmark, run_flame, sample as select,
    train_from_labels, write_pr_csv, GroundTruthOracle, LabelOracle, SampleOutput,
    SyntheticBenchmarkSpec,
};
use flame_core::sampler::FlameConfig;
use flame_core::support_theory::{
    hard_margin_suite, homogeneous_suite, multiplier_extension_suite, soft_margin_suite, SuitePlan,
    SuiteSummary,
};
use flame_core::{FlameError, Result};

use crate::{Format, GlobalArgs};

fn config_error(message: impl Into<String>) -> FlameError {
    FlameError::Config {
        field: "config".into(),
        message: message.into(),
    }
}

/// Reads the config by extension (`.toml`, otherwise JSON) and applies `--seed`.
pub fn load_config(g: &GlobalArgs) -> Result<FlameConfig> {
    let mut config = match &g.config {
        None => FlameConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("toml"))
            {
                toml::from_str(&text).map_err(|e| config_error(e.to_string()))?
            } else {
                serde_json::from_str(&text).map_err(|e| config_error(e.to_string()))?
            }
        }
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn out_path(g: &GlobalArgs, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&g.out_dir)?;
    Ok(g.out_dir.join(name))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn sample(g: &GlobalArgs, pool: &Path, query: &Path) -> Result<u8> {
    let config = load_config(g)?;
    let records = load_pool(pool)?;
    let query = load_query(query)?;
    let augmented = augment_records(&records, &query)?;
    let out = select(&records, &augmented, &config)?;
    write_json(&out_path(g, "shots.json")?, &out)?;
    print_json(&out)?;
    Ok(0)
}

fn read_shots(path: &Path) -> Result<SampleOutput> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Prompts on the terminal for every shot; `s` skips, `q` stops.
struct TerminalOracle {
    annotator: String,
    image_refs: std::collections::HashMap<String, String>,
}

impl LabelOracle for TerminalOracle {
    fn annotate(&mut self, shot_ids: &[String]) -> Result<LabelSet> {
        let stdin = std::io::stdin();
        let mut lines = stdin.lock().lines();
        let mut labels = LabelSet::new();
        for (k, id) in shot_ids.iter().enumerate() {
            loop {
                let image = self
                    .image_refs
                    .get(id)
                    .map(|r| format!(" ({r})"))
                    .unwrap_or_default();
                eprint!(
                    "[{}/{}] {id}{image} is a target? [y/n/s/q] ",
                    k + 1,
                    shot_ids.len()
                );
                std::io::stderr().flush()?;
                let Some(line) = lines.next() else {
                    return Ok(labels);
                };
                match line?.trim() {
                    "y" | "1" => {
                        labels.insert(id.clone(), LabelEntry::now(true, self.annotator.clone()))
                    }
                    "n" | "0" => {
                        labels.insert(id.clone(), LabelEntry::now(false, self.annotator.clone()))
                    }
                    "s" => break,
                    "q" => return Ok(labels),
                    _ => continue,
                };
                break;
            }
        }
        Ok(labels)
    }
}

pub fn label(
    g: &GlobalArgs,
    shots: &Path,
    from_file: Option<&Path>,
    ground_truth: Option<&Path>,
    pool: Option<&Path>,
    annotator: &str,
) -> Result<u8> {
    let shots = read_shots(shots)?;
    let labels = match (from_file, ground_truth) {
        (Some(file), _) => {
            let (labels, warnings) = load_labels_for(file, &shots.shot_ids)?;
            for w in warnings {
                log::warn!("{w}");
            }
            labels
        }
        (None, Some(gt_pool)) => {
            GroundTruthOracle::new(GroundTruth::from_pool(&load_pool(gt_pool)?))
                .annotate(&shots.shot_ids)?
        }
        (None, None) => {
            let image_refs = match pool {
                Some(p) => load_pool(p)?
                    .into_iter()
                    .filter_map(|r| r.image_ref.map(|i| (r.id, i)))
                    .collect(),
                None => Default::default(),
            };
            TerminalOracle {
                annotator: annotator.to_string(),
                image_refs,
            }
            .annotate(&shots.shot_ids)?
        }
    };
    let path = out_path(g, "labels.csv")?;
    save_labels(&path, &labels, &shots.shot_ids)?;
    let remaining = shots.shot_ids.len() - labels.len();
    print_json(
        &serde_json::json!({ "labels_file": path, "labeled": labels.len(), "remaining": remaining }),
    )?;
    Ok(0)
}

pub fn train(g: &GlobalArgs, pool: &Path, query: &Path, shots: &Path, labels: &Path) -> Result<u8> {
    let config = load_config(g)?;
    let records = load_pool(pool)?;
    let augmented = augment_records(&records, &load_query(query)?)?;
    let shots = read_shots(shots)?;
    let (labels, _) = load_labels_for(labels, &shots.shot_ids)?;
    if labels.len() < shots.shot_ids.len() {
        log::warn!(
            "training on {} of {} shots",
            labels.len(),
            shots.shot_ids.len()
        );
    }
    let model = train_from_labels(&records, &augmented, &shots.shot_ids, &labels, &config)?;
    let path = out_path(g, "model.json")?;
    model.save(&path)?;
    print_json(&serde_json::json!({ "model_file": path, "model_sha256": model.sha256()? }))?;
    Ok(0)
}

pub fn eval(g: &GlobalArgs, model: &Path, pool: &Path, query: &Path) -> Result<u8> {
    let model = ModelFile::load(model)?;
    let records = load_pool(pool)?;
    let augmented = augment_records(&records, &load_query(query)?)?;
    let report = evaluate_model(
        &model,
        &records,
        &augmented,
        &GroundTruth::from_pool(&records),
    )?;
    write_json(&out_path(g, "report.json")?, &report)?;
    write_pr_csv(&out_path(g, "pr_curve.csv")?, &report)?;
    print_json(&serde_json::json!({
        "average_precision": report.average_precision,
        "baseline_ap": report.baseline_ap,
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
    }))?;
    Ok(0)
}

pub fn verify(g: &GlobalArgs, quick: bool) -> Result<u8> {
    let mut plan = if quick {
        SuitePlan::quick()
    } else {
        SuitePlan::full()
    };
    if let Some(seed) = g.seed {
        plan.base_seed = seed;
    }
    let mut rows: Vec<SuiteSummary> = Vec::new();
    macro_rules! run {
        ($suite:expr, $file:literal) => {{
            let report = $suite(&plan);
            write_json(&out_path(g, $file)?, &report)?;
            rows.push(report.summary());
        }};
    }
    run!(hard_margin_suite, "hard_margin_support.json");
    run!(soft_margin_suite, "soft_margin_support.json");
    run!(multiplier_extension_suite, "multiplier_extension.json");
    run!(homogeneous_suite, "homogeneous_network.json");

    println!(
        "{:<24} {:>9} {:>10} {:>8}",
        "suite", "instances", "seconds", "result"
    );
    for r in &rows {
        let count = format!("{}/{}", r.instances_passed, r.instances_total);
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "{:<24} {:>9} {:>10.2} {:>8}",
            r.suite, count, r.elapsed_seconds, verdict
        );
    }
    Ok(if rows.iter().all(|r| r.passed) { 0 } else { 1 })
}

pub fn bench(g: &GlobalArgs, write_pool: bool) -> Result<u8> {
    let config = load_config(g)?;
    let spec = SyntheticBenchmarkSpec {
        seed: config.seed,
        ..Default::default()
    };
    let bench = generate_synthetic_benchmark(&spec)?;
    if write_pool {
        let (name, format) = match g.format {
            Format::Json => ("pool.jsonl", PoolFormat::Json),
            Format::Binary => ("pool.bin", PoolFormat::Binary),
        };
        save_pool(&out_path(g, name)?, &bench.pool, format)?;
        save_query(&out_path(g, "query.json")?, &bench.query)?;
    }
    let mut oracle = GroundTruthOracle::new(GroundTruth::from_pool(&bench.pool));
    let run = run_flame(&bench.pool, &bench.query, &config, &mut oracle, None)?;
    let ap_baseline = run
        .report
        .baseline_ap
        .expect("benchmark pool has ground truth");
    let report = serde_json::json!({
        "seed": spec.seed,
        "spec": spec,
        "ap_flame": run.report.average_precision,
        "ap_baseline": ap_baseline,
        "gain": run.report.average_precision - ap_baseline,
        "effective_k": run.sample.selection.effective_k,
        "post_labeling_seconds": run.post_labeling_seconds,
        "model_sha256": run.model.sha256()?,
    });
    write_json(&out_path(g, "bench_report.json")?, &report)?;
    print_json(&report)?;
    Ok(0)
}

pub fn serve(port: u16, data_dir: PathBuf, assets_dir: Option<PathBuf>) -> Result<u8> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(flame_service::serve(flame_service::ServiceConfig {
        port,
        data_dir,
        assets_dir,
    }))?;
    Ok(0)
}
