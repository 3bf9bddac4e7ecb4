//! Executable checks that an SVM or homogeneous network trained only on its
//! support points reproduces the full-data classifier.

pub mod data;
mod equivalence;
mod homogeneous;
mod kkt;
mod probes;
mod suites;

pub use equivalence::{
    multiplier_extension_check, retrain_on_support, EquivalenceReport, ExtensionReport,
};
pub use homogeneous::{
    homogeneous_gradient_flow_experiment, infer_support, normalized_margins, train_homogeneous,
    HomogeneousParams, HomogeneousRunReport, DEFAULT_MARGIN_TOLERANCE, HOMOGENEITY_DEGREE,
};
pub use kkt::{
    hard_margin_params, kkt_check_hard_margin, kkt_check_soft_margin, soft_margin_residuals,
    KktReport, HARD_MARGIN_C, HARD_MARGIN_SMO_TOLERANCE, HARD_MARGIN_TOLERANCE,
    SOFT_MARGIN_TOLERANCE,
};
pub use probes::{probe_set, sign_agreement, GRID_SIDE, RANDOM_PROBES};
pub use suites::*;
