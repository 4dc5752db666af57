use std::collections::HashSet;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::backend::Simplifier;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{
    report_from_tokenized, sari_instance, sentence_bleu_tokenized, EvalInstance, Language,
    MetricReport, TokenizeMode, TokenizedInstance, DEFAULT_MAX_N,
};

/// A test-set entry: an input sentence and its reference simplifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestItem {
    pub id: String,
    pub input: String,
    pub references: Vec<String>,
}

/// Either a test item or an aligned pair, whose `simple` side becomes the
/// single reference.
#[derive(Deserialize)]
struct TestLine {
    id: String,
    #[serde(alias = "source")]
    input: String,
    references: Option<Vec<String>>,
    simple: Option<String>,
}

/// Reads `{id, input, references}` lines or aligned pair records.
pub fn read_test_set(path: &Path) -> Result<Vec<TestItem>> {
    let lines: Vec<TestLine> = jsonl::read_records(path)?;
    lines
        .into_iter()
        .map(|l| {
            let references = match (l.references, l.simple) {
                (Some(refs), _) => refs,
                (None, Some(simple)) => vec![simple],
                (None, None) => {
                    return Err(Error::Invalid(format!(
                        "{}: test item `{}` has neither references nor a simple side",
                        path.display(),
                        l.id
                    )))
                }
            };
            Ok(TestItem {
                id: l.id,
                input: l.input,
                references,
            })
        })
        .collect()
}

/// Content hash of a test set, independent of item order.
pub fn test_set_hash(items: &[TestItem]) -> String {
    let mut sorted: Vec<&TestItem> = items.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut hasher = Sha256::new();
    for item in sorted {
        for field in std::iter::once(&item.id)
            .chain(std::iter::once(&item.input))
            .chain(&item.references)
        {
            hasher.update(field.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update([0x1e]);
    }
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    pub output: String,
    pub sentence_bleu: f64,
    pub sari: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRunResult {
    pub system_name: String,
    pub backend: String,
    pub toolkit_version: String,
    pub language: Language,
    pub test_set_hash: String,
    pub config_fingerprint: String,
    pub report: MetricReport,
    pub per_instance: Vec<InstanceResult>,
    /// Unix seconds; the only field that differs between identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl EvalRunResult {
    pub fn load(path: &Path) -> Result<Self> {
        jsonl::read_json(path)
    }

    /// A copy without the timestamp, for byte comparisons.
    pub fn without_timestamp(&self) -> Self {
        EvalRunResult {
            generated_at: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub system_name: String,
    /// Recorded in the result and the fingerprint.
    pub backend_label: String,
    pub language: Language,
    pub timestamp: bool,
}

impl EvalConfig {
    pub fn new(system_name: impl Into<String>, backend_label: impl Into<String>) -> Self {
        EvalConfig {
            system_name: system_name.into(),
            backend_label: backend_label.into(),
            language: Language::default(),
            timestamp: true,
        }
    }
}

fn fingerprint(config: &EvalConfig, test_hash: &str) -> String {
    let mut hasher = Sha256::new();
    for part in [
        crate::VERSION,
        &config.system_name,
        &config.backend_label,
        &config.language.to_string(),
        &TokenizeMode::Metric.to_string(),
        test_hash,
    ] {
        hasher.update(part.as_bytes());
        hasher.update([0]);
    }
    hex::encode(&hasher.finalize()[..16])
}

/// Runs `backend` over the test set and scores the outputs.
///
/// Nothing is scored unless every item gets a non-empty output; otherwise
/// the error lists the failed ids.
pub fn run_eval(
    backend: &dyn Simplifier,
    items: &[TestItem],
    config: &EvalConfig,
) -> Result<EvalRunResult> {
    if items.is_empty() {
        return Err(Error::EmptyInput("an evaluation run"));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = items.iter().find(|i| !seen.insert(i.id.as_str())) {
        return Err(Error::DuplicateId(dup.id.clone()));
    }
    let mut ordered = items.to_vec();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    for item in &ordered {
        if item.references.is_empty() {
            return Err(Error::Invalid(format!(
                "test item `{}` has no references",
                item.id
            )));
        }
    }

    backend.precheck(&ordered)?;
    let outcomes = backend.simplify(&ordered);
    assert_eq!(
        outcomes.len(),
        ordered.len(),
        "backend returned a wrong number of outcomes"
    );

    let mut failed = Vec::new();
    let mut instances = Vec::with_capacity(ordered.len());
    for (item, outcome) in ordered.iter().zip(outcomes) {
        match outcome {
            Ok(output) if !output.trim().is_empty() => instances.push(EvalInstance {
                id: item.id.clone(),
                input: item.input.clone(),
                output,
                references: item.references.clone(),
            }),
            Ok(_) => {
                log::warn!("empty output for `{}`", item.id);
                failed.push(item.id.clone());
            }
            Err(e) => {
                log::warn!("backend failed for `{}`: {e}", item.id);
                failed.push(item.id.clone());
            }
        }
    }
    if !failed.is_empty() {
        return Err(Error::Backend {
            backend: config.backend_label.clone(),
            failed,
        });
    }

    let tokenized = TokenizedInstance::all(&instances)?;
    let per_instance = instances
        .iter()
        .zip(&tokenized)
        .map(|(inst, tok)| InstanceResult {
            id: inst.id.clone(),
            output: inst.output.clone(),
            sentence_bleu: sentence_bleu_tokenized(tok, DEFAULT_MAX_N),
            sari: sari_instance(tok).sari,
        })
        .collect();
    let report = report_from_tokenized(&instances, &tokenized, config.language)?;

    let test_hash = test_set_hash(items);
    Ok(EvalRunResult {
        system_name: config.system_name.clone(),
        backend: config.backend_label.clone(),
        toolkit_version: crate::VERSION.to_string(),
        language: config.language,
        config_fingerprint: fingerprint(config, &test_hash),
        test_set_hash: test_hash,
        report,
        per_instance,
        generated_at: config.timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    })
}
