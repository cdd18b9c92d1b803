//! Deterministic experiment harness: JSON-configured runs, side-by-side
//! optimizer comparisons, hyperparameter sweeps, and CSV/JSON emitters whose
//! output is byte-identical for identical configurations and seeds.

mod compare;
mod config;
mod emit;
mod rng;
mod run;
mod sweep;

pub use compare::{compare_runs, comparison_csv, compare_summary_csv, CompareConfig, CompareReport, LabeledOptimizer};
pub use config::{
    BuiltProblem, DiagnosticsSpec, ExperimentConfig, OptimizerSpec, OracleHandle, ProblemSpec,
    RunSpec,
};
pub use emit::{
    epochs_from_csv, epochs_to_csv, report_from_json, report_to_json, sharpness_from_csv,
    sharpness_to_csv, trace_from_csv, trace_from_jsonl, trace_to_csv, trace_to_jsonl,
};
pub use rng::{mix_seed, stream_rng};
pub use run::{
    run_experiment, EpochLoss, RunRecord, RunReport, RunStatus, RunSummary, SharpnessRecord,
};
pub use sweep::{run_sweep, sweep_csv, CellStatus, SweepCell, SweepConfig, SweepGrid, SweepReport};
