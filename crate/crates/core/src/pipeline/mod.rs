//! End-to-end runs, evaluation and the synthetic benchmark.

mod benchmark;
mod eval;
mod oracle;
mod run;

pub use benchmark::{generate_synthetic_benchmark, SyntheticBenchmark, SyntheticBenchmarkSpec};
pub use eval::{
    evaluate, rank, write_pr_csv, EvalReport, PrPoint, ScoredItem, OPERATING_THRESHOLD,
};
pub use oracle::{FixedOracle, GroundTruthOracle, LabelOracle};
pub use run::{
    augment_records, evaluate_model, run_benchmark, run_flame, sample, train_from_labels,
    BenchReport, FlameRun, SampleOutput,
};
