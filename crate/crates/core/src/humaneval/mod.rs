//! Dual-annotator rubric evaluation: items, ratings, agreement, consensus
//! and per-system means, stored as an append-only event log.

mod agreement;
pub mod api;
mod rubric;
mod store;
mod summary;

pub use agreement::{agreement, AgreementReport, Disagreement};
pub use rubric::{rubric, Criterion, RubricCriterion, RubricLevel, ScoreError, Scores, MAX_SCORE};
pub use store::{
    AnnotationItem, ConsensusRecord, Event, EventStore, HumanEvalError, ItemFilter, ItemSpec,
    ItemState, ItemStatus, LogEntry, Projection, Rating, RatingOutcome,
};
pub use summary::{consensus_summary, Summary, SystemSummary};
