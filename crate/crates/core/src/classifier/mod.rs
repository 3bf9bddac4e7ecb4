//! Lightweight binary classifiers trained on the labeled shots.

mod kernel;
mod mlp;
mod model_file;
mod svm;

pub use kernel::{default_gamma, KernelSpec};
pub use mlp::{train_mlp, MlpGradient, MlpModel, MlpParams};
pub use model_file::{config_hash, sha256_hex, ModelFile, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use svm::{
    train_svm, train_svm_traced, SvmModel, SvmParams, SMO_MAX_UPDATES, SMO_TOLERANCE,
    SUPPORT_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

pub(crate) fn check_binary_labels(labels: &[bool]) -> Result<()> {
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(FlameError::SingleClass {
            present: if positives == 0 {
                "negative".into()
            } else {
                "positive".into()
            },
        });
    }
    Ok(())
}

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        match self {
            TrainedModel::Svm(m) => m.training_dim,
            TrainedModel::Mlp(m) => m.input_dim,
        }
    }

    /// Signed score; positive means the target class.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Svm(m) => m.decision(x),
            TrainedModel::Mlp(m) => m.forward(x),
        }
    }

    pub fn decision_batch<P: AsRef<[f64]> + Sync>(&self, xs: &[P]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        match self {
            TrainedModel::Svm(m) => m.decision_batch(xs),
            TrainedModel::Mlp(m) => {
                for x in xs {
                    crate::numerics::check_dim(m.input_dim, x.as_ref().len())?;
                }
                Ok(xs
                    .par_iter()
                    .map(|x| m.forward_unchecked(x.as_ref()))
                    .collect())
            }
        }
    }
}
