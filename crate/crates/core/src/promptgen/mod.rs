//! Persona prompt templates and the staged silver-data pipeline.
//!
//! Each sentence passes through the configured stages in order (lexical,
//! then syntactic, in the default setup); every stage sees the previous
//! stage's output. Outputs are checked against a few cheap quality flags so
//! suspicious pairs can be routed to human correction.

mod batch;
mod client;
mod limiter;
mod pipeline;
mod template;
#[cfg(test)]
pub(crate) mod testing;

pub use batch::{
    batch_generate, failures_path, raw_log_path, BatchConfig, FailedRecord, RunSummary,
    SilverRecord,
};
pub use client::{
    ChatMessage, CompletionClient, CompletionError, CompletionRequest, EndpointConfig,
    HttpCompletionClient, Role,
};
pub use limiter::RateLimiter;
pub(crate) use pipeline::call_with_retry;
pub use pipeline::{
    quality_flags, run_pipeline, stage_versions, GenerationResult, ModelParams, PipelineOptions,
    QualityFlag, RetryPolicy, FOREIGN_SCRIPT_LIMIT, LENGTH_EXPANSION_LIMIT,
};
pub use template::{render_prompt, FewShot, PromptTemplate, RenderedPrompt, Stage};
