//! Few-shot refinement of open-vocabulary detection proposals.
//!
//! The crate selects a small set of marginal, diverse proposal embeddings for a
//! human to label, trains a lightweight binary classifier on them, and ships
//! numerical checks showing that such classifiers are fully determined by their
//! support examples.
//!
//! Module map:
//!
//! - [`numerics`]: cosine similarity, PCA, Gaussian KDE, k-means.
//! - [`sampler`]: the marginal-sample selection procedure and SMOTE balancing.
//! - [`classifier`]: soft-margin SVM (SMO) and a bias-free two-layer ReLU MLP.
//! - [`support_theory`]: KKT residual reports and retrain-on-support experiments.
//! - [`embedding_io`]: pool/label file formats and persisted session state.
//! - [`pipeline`]: end-to-end orchestration, average precision, synthetic benchmark.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod embedding_io;
pub mod error;
pub mod numerics;
pub mod pipeline;
pub mod sampler;
pub mod support_theory;

pub use error::{FlameError, Result};
