use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainedModel;
use crate::error::{FlameError, Result};

pub const MODEL_FORMAT: &str = "flame-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAX_PROBES: usize = 8;

/// Hex SHA-256 of the canonical JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Versioned on-disk model document.
///
/// `probes` and `probe_scores` are a few stored inputs with their decision
/// scores; loading recomputes them and rejects the file unless every score
/// matches bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub training_dim: usize,
    pub model: TrainedModel,
    pub probes: Vec<Vec<f64>>,
    pub probe_scores: Vec<f64>,
}

impl ModelFile {
    pub fn new(
        model: TrainedModel,
        config_hash: String,
        probe_inputs: &[Vec<f64>],
    ) -> Result<Self> {
        let probes: Vec<Vec<f64>> = probe_inputs.iter().take(MAX_PROBES).cloned().collect();
        let probe_scores = model.decision_batch(&probes)?;
        Ok(ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            config_hash,
            training_dim: model.input_dim(),
            model,
            probes,
            probe_scores,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.verify()?;
        Ok(file)
    }

    /// Hex SHA-256 of the exact bytes [`ModelFile::save`] writes.
    pub fn sha256(&self) -> Result<String> {
        Ok(sha256_hex(self.to_json()?.as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn verify(&self) -> Result<()> {
        let bad = |message: String| FlameError::Format {
            line: None,
            message,
        };
        if self.format != MODEL_FORMAT {
            return Err(bad(format!("unexpected model format `{}`", self.format)));
        }
        if self.version != MODEL_FORMAT_VERSION {
            return Err(bad(format!("unsupported model version {}", self.version)));
        }
        if self.training_dim != self.model.input_dim() {
            return Err(bad("training_dim does not match the model".into()));
        }
        if self.probes.len() != self.probe_scores.len() {
            return Err(bad("probe count mismatch".into()));
        }
        let recomputed = self.model.decision_batch(&self.probes)?;
        if recomputed
            .iter()
            .zip(&self.probe_scores)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(bad("stored probe scores do not reproduce".into()));
        }
        Ok(())
    }
}
