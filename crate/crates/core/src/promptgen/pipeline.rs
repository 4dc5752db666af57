use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::{CompletionClient, CompletionError, CompletionRequest};
use super::limiter::RateLimiter;
use super::template::{render_prompt, PromptTemplate, Stage};
use crate::corpus::{AlignedPair, Origin, SentenceRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model: "default".into(),
            temperature: 0.0,
            max_tokens: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            backoff_base: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    IdenticalOutput,
    LengthExpanded,
    EmptyOutput,
    ForeignScript,
}

/// Output/input character ratio above which an output is flagged.
pub const LENGTH_EXPANSION_LIMIT: f64 = 2.0;
/// Share of non-Latin letters above which an output is flagged.
pub const FOREIGN_SCRIPT_LIMIT: f64 = 0.10;

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || ('\u{00C0}'..='\u{024F}').contains(&c)
        || ('\u{1E00}'..='\u{1EFF}').contains(&c)
        || matches!(c, 'ª' | 'º')
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn quality_flags(source: &str, output: &str) -> BTreeSet<QualityFlag> {
    let mut flags = BTreeSet::new();
    if output.trim().is_empty() {
        flags.insert(QualityFlag::EmptyOutput);
        return flags;
    }
    if squash(source) == squash(output) {
        flags.insert(QualityFlag::IdenticalOutput);
    }
    let src_len = source.chars().count();
    if src_len > 0 && output.chars().count() as f64 / src_len as f64 > LENGTH_EXPANSION_LIMIT {
        flags.insert(QualityFlag::LengthExpanded);
    }
    let letters: Vec<char> = output.chars().filter(|c| c.is_alphabetic()).collect();
    if !letters.is_empty() {
        let foreign = letters.iter().filter(|c| !is_latin_letter(**c)).count();
        if foreign as f64 / letters.len() as f64 > FOREIGN_SCRIPT_LIMIT {
            flags.insert(QualityFlag::ForeignScript);
        }
    }
    flags
}

/// One silver pair with its per-stage history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub pair: AlignedPair,
    pub intermediate_outputs: Vec<String>,
    pub flags: BTreeSet<QualityFlag>,
    pub raw_log_ref: String,
    /// Rendered prompt text per stage that was sent.
    #[serde(skip)]
    pub prompts: Vec<String>,
}

impl GenerationResult {
    pub fn needs_review(&self) -> bool {
        !self.flags.is_empty()
    }
}

#[derive(Debug, Default)]
pub struct PipelineOptions<'a> {
    pub params: ModelParams,
    pub retry: RetryPolicy,
    pub limiter: Option<&'a RateLimiter>,
}

/// Version string recorded on pairs from `stages`: the stage versions
/// joined with `+`.
pub fn stage_versions(stages: &[PromptTemplate]) -> String {
    stages
        .iter()
        .map(|t| t.version.as_str())
        .collect::<Vec<_>>()
        .join("+")
}

/// Strips an echoed `Simplified:` label and collapses whitespace.
fn clean_completion(raw: &str) -> String {
    let trimmed = raw.trim();
    let body = trimmed
        .strip_prefix("Simplified:")
        .or_else(|| trimmed.strip_prefix("Lihtsustatud:"))
        .unwrap_or(trimmed);
    squash(body)
}

pub(crate) fn call_with_retry(
    client: &dyn CompletionClient,
    request: &CompletionRequest,
    options: &PipelineOptions<'_>,
    stage: usize,
) -> Result<String> {
    let max_attempts = options.retry.max_attempts.max(1);
    let mut attempt = 0;
    loop {
        attempt += 1;
        if let Some(limiter) = options.limiter {
            limiter.acquire();
        }
        match client.complete(request) {
            Ok(text) => return Ok(text),
            Err(CompletionError::Transient(msg)) if attempt < max_attempts => {
                log::debug!("stage {stage} attempt {attempt} failed: {msg}; retrying");
                let delay = options
                    .retry
                    .backoff_base
                    .saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(delay);
            }
            Err(e) => {
                return Err(Error::Stage {
                    stage,
                    attempts: attempt,
                    message: e.to_string(),
                })
            }
        }
    }
}

/// Runs the stages in order, feeding each stage the previous output.
///
/// An empty completion stops the chain: the remaining stages get empty
/// outputs and the result is flagged for review. Endpoint failures that
/// survive the retry policy abort the job with the 1-based stage index.
pub fn run_pipeline(
    sentence: &SentenceRecord,
    stages: &[PromptTemplate],
    client: &dyn CompletionClient,
    options: &PipelineOptions<'_>,
) -> Result<GenerationResult> {
    if stages.is_empty() {
        return Err(Error::Invalid(
            "a generation job needs at least one stage".into(),
        ));
    }
    let positions = |s: Stage| stages.iter().position(|t| t.stage == s);
    if let (Some(lex), Some(syn)) = (positions(Stage::Lexical), positions(Stage::Syntactic)) {
        if syn < lex {
            log::warn!(
                "syntactic stage runs before the lexical stage for `{}`",
                sentence.id
            );
        }
    }

    let mut current = sentence.text.clone();
    let mut outputs = Vec::with_capacity(stages.len());
    let mut prompts = Vec::with_capacity(stages.len());
    for (idx, template) in stages.iter().enumerate() {
        if current.is_empty() {
            outputs.push(String::new());
            continue;
        }
        let prompt = render_prompt(template, &current);
        let request = CompletionRequest {
            model: options.params.model.clone(),
            messages: prompt.messages.clone(),
            temperature: options.params.temperature,
            max_tokens: options.params.max_tokens,
        };
        let raw = call_with_retry(client, &request, options, idx + 1)?;
        current = clean_completion(&raw);
        prompts.push(prompt.text());
        outputs.push(current.clone());
    }

    let simple = outputs.last().cloned().unwrap_or_default();
    let flags = quality_flags(&sentence.text, &simple);
    let version = stage_versions(stages);

    let mut hasher = Sha256::new();
    for part in std::iter::once(&sentence.id)
        .chain(std::iter::once(&version))
        .chain(&prompts)
        .chain(&outputs)
    {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hex::encode(hasher.finalize());

    Ok(GenerationResult {
        pair: AlignedPair {
            id: sentence.id.clone(),
            source: sentence.text.clone(),
            simple,
            origin: Origin::from_template_version(&version),
            template_version: Some(version),
            corrected: false,
        },
        intermediate_outputs: outputs,
        flags,
        raw_log_ref: format!("gen-{}", &digest[..16]),
        prompts,
    })
}
