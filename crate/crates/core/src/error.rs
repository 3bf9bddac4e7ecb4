use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, FlameError>;

/// Diagnostics attached to an empty marginal band so callers can widen the ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandDiagnostics {
    pub mode_density: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
}

#[derive(Debug, Error)]
pub enum FlameError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("empty pool")]
    EmptyPool,

    #[error("insufficient samples: requested {requested}, available {available}")]
    InsufficientSamples { requested: usize, available: usize },

    #[error(
        "marginal band is empty (mode density {:.6e}, sample densities in [{:.6e}, {:.6e}]); widen the ratio interval",
        .0.mode_density, .0.min_density, .0.max_density
    )]
    EmptyBand(BandDiagnostics),

    #[error("labels contain a single class ({present}); label more shots or widen the band")]
    SingleClass { present: String },

    #[error(
        "SMO did not converge after {iterations} pair updates (max violation {violation:.3e})"
    )]
    Convergence { iterations: usize, violation: f64 },

    #[error("training diverged at epoch {epoch} (non-finite loss); lower the learning rate")]
    Divergence { epoch: usize },

    #[error("data is not separable: {0}")]
    NotSeparable(String),

    #[error("unknown shot id `{0}`")]
    UnknownShot(String),

    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format {
        line: Option<usize>,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("record `{0}` contains a non-finite value")]
    NonFinite(String),

    #[error("evaluation requires at least one positive ground-truth label")]
    NoPositives,

    #[error("annotation incomplete: {labeled} of {expected} shots labeled")]
    AnnotationIncomplete { labeled: usize, expected: usize },

    #[error("session is in phase `{actual}`, operation requires `{required}`")]
    Phase { actual: String, required: String },

    #[error("session `{0}` is locked by another writer")]
    Locked(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FlameError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            FlameError::Dimension { .. } => "DimensionError",
            FlameError::DegenerateVector(_) => "DegenerateVectorError",
            FlameError::Config { .. } => "ConfigError",
            FlameError::EmptyPool => "EmptyPoolError",
            FlameError::InsufficientSamples { .. } => "InsufficientSamplesError",
            FlameError::EmptyBand(_) => "EmptyBandError",
            FlameError::SingleClass { .. } => "SingleClassError",
            FlameError::Convergence { .. } => "ConvergenceError",
            FlameError::Divergence { .. } => "DivergenceError",
            FlameError::NotSeparable(_) => "NotSeparableError",
            FlameError::UnknownShot(_) => "UnknownShotError",
            FlameError::Format { .. } => "FormatError",
            FlameError::DuplicateId(_) => "DuplicateIdError",
            FlameError::NonFinite(_) => "NonFiniteError",
            FlameError::NoPositives => "NoPositivesError",
            FlameError::AnnotationIncomplete { .. } => "AnnotationIncompleteError",
            FlameError::Phase { .. } => "PhaseError",
            FlameError::Locked(_) => "LockedError",
            FlameError::Io(_) => "IoError",
            FlameError::Json(_) => "JsonError",
        }
    }

    /// Structured details for error payloads.
    pub fn details(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            FlameError::Dimension { expected, found } => {
                json!({"expected": expected, "found": found})
            }
            FlameError::Config { field, .. } => json!({ "field": field }),
            FlameError::InsufficientSamples {
                requested,
                available,
            } => {
                json!({"requested": requested, "available": available})
            }
            FlameError::EmptyBand(diag) => serde_json::to_value(diag).unwrap_or_default(),
            FlameError::SingleClass { present } => json!({
                "present": present,
                "guidance": "relabel the shots or widen [ratio_lower, ratio_upper] to sample more candidates"
            }),
            FlameError::Convergence {
                iterations,
                violation,
            } => {
                json!({"iterations": iterations, "violation": violation})
            }
            FlameError::Format { line, .. } => json!({ "line": line }),
            FlameError::UnknownShot(id)
            | FlameError::DuplicateId(id)
            | FlameError::NonFinite(id) => {
                json!({ "id": id })
            }
            FlameError::AnnotationIncomplete { labeled, expected } => {
                json!({"labeled": labeled, "expected": expected})
            }
            FlameError::Phase { actual, required } => {
                json!({"actual": actual, "required": required})
            }
            _ => serde_json::Value::Null,
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        FlameError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
