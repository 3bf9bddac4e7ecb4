use flame_core::embedding_io::{Phase, SessionState};
use flame_core::pipeline::EvalReport;
use flame_core::sampler::FlameConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Path to a pool file (JSONL or binary).
    pub pool: String,
    /// Path to a query file.
    #[serde(default)]
    pub query: Option<String>,
    /// Inline query vector, used when `query` is absent.
    #[serde(default)]
    pub query_vector: Option<Vec<f64>>,
    #[serde(default)]
    pub config: Option<FlameConfig>,
    /// Optional caller-chosen id; a random one is generated otherwise.
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: Phase,
    pub shot_count: usize,
    pub labeled: usize,
    pub remaining: usize,
    pub warnings: Vec<String>,
    pub report: Option<EvalReport>,
}

impl From<&SessionState> for SessionView {
    fn from(s: &SessionState) -> Self {
        SessionView {
            id: s.id.clone(),
            status: s.phase,
            shot_count: s.shot_ids.len(),
            labeled: s.labels.len(),
            remaining: s.remaining(),
            warnings: s
                .selection
                .as_ref()
                .map(|sel| sel.warnings.clone())
                .unwrap_or_default(),
            report: s.report.clone(),
        }
    }
}

/// A shot as shown to the annotator. Never carries ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    pub shot_id: String,
    pub image_ref: Option<String>,
    pub similarity_c: f64,
    pub cluster_id: usize,
    pub density: f64,
    /// Coordinates in the first two principal axes of the shots.
    pub preview: Option<[f64; 2]>,
    /// The label submitted so far, if any.
    pub label: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateList {
    pub session_id: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LabelItem {
    pub shot_id: String,
    pub label: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitLabels {
    pub labels: Vec<LabelItem>,
    #[serde(default)]
    pub annotator: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitResult {
    pub accepted: usize,
    pub overwritten: usize,
    pub remaining: usize,
    pub status: Phase,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequest {
    #[serde(default)]
    pub allow_partial: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainResult {
    pub status: Phase,
    pub model_file: String,
    pub model_sha256: String,
    pub report: Option<EvalReport>,
    pub post_labeling_seconds: Option<f64>,
    pub cached: bool,
}
