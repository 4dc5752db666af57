//! Building and evaluating sentence simplification corpora.
//!
//! - [`corpus`]: sentence segmentation, candidate filtering, pair files, splits
//! - [`promptgen`]: persona prompt templates and the staged LLM pipeline
//! - [`metrics`]: BLEU, SARI, FKGL
//! - [`evalharness`]: running systems over a test set and comparing them
//! - [`humaneval`]: dual-annotator rating store, agreement and HTTP API

pub mod corpus;
pub mod error;
pub mod evalharness;
pub mod humaneval;
pub mod jsonl;
pub mod metrics;
pub mod promptgen;

pub use corpus::{AlignedPair, DatasetManifest, Origin, SentenceRecord};
pub use error::{Error, Result};
pub use evalharness::{BackendSpec, EvalRunResult};
pub use humaneval::{ConsensusRecord, Criterion, Rating};
pub use metrics::{EvalInstance, Language, MetricReport};
pub use promptgen::{GenerationResult, PromptTemplate};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
