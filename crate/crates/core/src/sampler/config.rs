use serde::{Deserialize, Serialize};

use crate::classifier::KernelSpec;
use crate::error::{FlameError, Result};

/// Which lightweight classifier is trained on the labeled shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Svm,
    Mlp,
}

/// Kernel choice before the RBF width is resolved against training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    /// `gamma: None` uses `1 / (dim · median pairwise squared distance)`.
    Rbf {
        gamma: Option<f64>,
    },
}

impl Default for KernelChoice {
    fn default() -> Self {
        KernelChoice::Rbf { gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub c: f64,
    pub kernel: KernelChoice,
    pub svm_tolerance: f64,
    pub mlp_hidden: usize,
    pub mlp_epochs: usize,
    pub mlp_learning_rate: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::Svm,
            c: 1.0,
            kernel: KernelChoice::default(),
            svm_tolerance: crate::classifier::SMO_TOLERANCE,
            mlp_hidden: 16,
            mlp_epochs: 2000,
            mlp_learning_rate: 0.1,
        }
    }
}

impl ClassifierConfig {
    /// Resolves the kernel against the (augmented) training inputs.
    pub fn resolve_kernel(&self, inputs: &[Vec<f64>]) -> KernelSpec {
        match self.kernel {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Rbf { gamma: Some(gamma) } => KernelSpec::Rbf { gamma },
            KernelChoice::Rbf { gamma: None } => KernelSpec::Rbf {
                gamma: crate::classifier::default_gamma(inputs),
            },
        }
    }
}

/// Hyperparameters of the marginal-sample selection procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlameConfig {
    /// Number of shots `K` sent to the annotator.
    pub shots: usize,
    /// PCA dimension `ℓ`.
    pub pca_dim: usize,
    /// KDE bandwidth `h`; Scott's rule on the projections when unset.
    pub bandwidth: Option<f64>,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    /// SMOTE runs when the labeled imbalance ratio exceeds this.
    pub imbalance_threshold: f64,
    pub smote_neighbors: usize,
    pub jitter_sigma: f64,
    pub seed: u64,
    /// Optional zero-shot floor: pool entries with cosine below it are ignored.
    pub similarity_floor: Option<f64>,
    pub classifier: ClassifierConfig,
}

impl Default for FlameConfig {
    fn default() -> Self {
        FlameConfig {
            shots: 30,
            pca_dim: 1,
            bandwidth: None,
            ratio_lower: 0.3,
            ratio_upper: 0.7,
            imbalance_threshold: 2.0,
            smote_neighbors: 5,
            jitter_sigma: 1e-3,
            seed: 0,
            similarity_floor: None,
            classifier: ClassifierConfig::default(),
        }
    }
}

impl FlameConfig {
    pub fn validate(&self) -> Result<()> {
        let err = FlameError::config;
        if self.shots < 2 {
            return Err(err("shots", "must be at least 2"));
        }
        if self.pca_dim == 0 {
            return Err(err("pca_dim", "must be positive"));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(err("bandwidth", "must be a positive finite number"));
            }
        }
        if !(self.ratio_lower > 0.0 && self.ratio_lower < 1.0) {
            return Err(err("ratio_lower", "must lie in (0, 1)"));
        }
        if !(self.ratio_upper > 0.0 && self.ratio_upper < 1.0) {
            return Err(err("ratio_upper", "must lie in (0, 1)"));
        }
        if self.ratio_lower >= self.ratio_upper {
            return Err(err("ratio_lower", "must be strictly less than ratio_upper"));
        }
        if !(self.imbalance_threshold > 1.0) || !self.imbalance_threshold.is_finite() {
            return Err(err(
                "imbalance_threshold",
                "must be a finite number greater than 1",
            ));
        }
        if self.smote_neighbors == 0 {
            return Err(err("smote_neighbors", "must be positive"));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(err("jitter_sigma", "must be non-negative and finite"));
        }
        if let Some(floor) = self.similarity_floor {
            if !(-1.0..=1.0).contains(&floor) {
                return Err(err("similarity_floor", "must lie in [-1, 1]"));
            }
        }
        let c = &self.classifier;
        if !(c.c > 0.0 && c.c.is_finite()) {
            return Err(err("classifier.c", "must be a positive finite number"));
        }
        if let KernelChoice::Rbf { gamma: Some(g) } = c.kernel {
            if !(g > 0.0 && g.is_finite()) {
                return Err(err(
                    "classifier.kernel.gamma",
                    "must be a positive finite number",
                ));
            }
        }
        if !(c.svm_tolerance > 0.0) {
            return Err(err("classifier.svm_tolerance", "must be positive"));
        }
        if c.mlp_hidden == 0 || c.mlp_epochs == 0 {
            return Err(err(
                "classifier.mlp_hidden",
                "hidden width and epochs must be positive",
            ));
        }
        if !(c.mlp_learning_rate > 0.0) {
            return Err(err("classifier.mlp_learning_rate", "must be positive"));
        }
        Ok(())
    }
}
