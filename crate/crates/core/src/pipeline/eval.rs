use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

/// Scores above this count as positive predictions.
pub const OPERATING_THRESHOLD: f64 = 0.0;

/// One ranked item: score, ground truth, and id for tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub id: String,
    pub score: f64,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// One point per rank, in ranking order.
    pub curve: Vec<PrPoint>,
    pub average_precision: f64,
    pub threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub positives: usize,
    pub total: usize,
    /// AP of the cosine-similarity ranking of the same pool.
    pub baseline_ap: Option<f64>,
}

/// Sorts by score descending, ties by id ascending.
pub fn rank(items: &mut [ScoredItem]) {
    items.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
}

/// All-points average precision with the precision envelope.
pub fn evaluate(items: &[ScoredItem]) -> Result<EvalReport> {
    if items.iter().any(|i| !i.score.is_finite()) {
        return Err(FlameError::NonFinite("evaluation score".into()));
    }
    let positives = items.iter().filter(|i| i.label).count();
    if positives == 0 {
        return Err(FlameError::NoPositives);
    }
    let mut ranked = items.to_vec();
    rank(&mut ranked);

    let mut curve = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (k, item) in ranked.iter().enumerate() {
        tp += item.label as usize;
        curve.push(PrPoint {
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (k + 1) as f64,
        });
    }

    let mut envelope = vec![0.0; curve.len()];
    let mut best = 0.0_f64;
    for k in (0..curve.len()).rev() {
        best = best.max(curve[k].precision);
        envelope[k] = best;
    }
    let mut sum = 0.0;
    for (k, item) in ranked.iter().enumerate() {
        if item.label {
            sum += envelope[k];
        }
    }

    let predicted: Vec<&ScoredItem> = ranked
        .iter()
        .filter(|i| i.score > OPERATING_THRESHOLD)
        .collect();
    let true_positives = predicted.iter().filter(|i| i.label).count();
    Ok(EvalReport {
        curve,
        average_precision: sum / positives as f64,
        threshold: OPERATING_THRESHOLD,
        true_positives,
        false_positives: predicted.len() - true_positives,
        false_negatives: positives - true_positives,
        positives,
        total: items.len(),
        baseline_ap: None,
    })
}

/// Writes the curve as `recall,precision` rows.
pub fn write_pr_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "recall,precision")?;
    for p in &report.curve {
        writeln!(w, "{},{}", p.recall, p.precision)?;
    }
    w.flush()?;
    Ok(())
}
