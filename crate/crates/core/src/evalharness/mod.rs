//! Running simplification backends over a test set, checkpoint selection
//! and cross-system comparison tables.

mod backend;
mod compare;
mod run;
mod sweep;

pub use backend::{
    resolve, BackendOptions, BackendSpec, CommandBackend, CompletionBackend, FileMapBackend,
    IdentityBackend, Outcome, OutputRecord, Simplifier,
};
pub use compare::{compare_systems, BestMarks, Comparison, ComparisonRow};
pub use run::{
    read_test_set, run_eval, test_set_hash, EvalConfig, EvalRunResult, InstanceResult, TestItem,
};
pub use sweep::{
    checkpoint_sweep, discover_checkpoints, rank_reports, Checkpoint, RankedCheckpoint,
    SelectionMetric, SweepResult,
};
