use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::client::{CompletionClient, CompletionError, CompletionRequest};
use super::limiter::RateLimiter;
use super::pipeline::{
    run_pipeline, GenerationResult, ModelParams, PipelineOptions, QualityFlag, RetryPolicy,
};
use super::template::PromptTemplate;
use crate::corpus::{AlignedPair, SentenceRecord};
use crate::error::{Error, Result};
use crate::jsonl;

/// A line of the silver output file: the pair plus its review flags and
/// per-stage outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilverRecord {
    #[serde(flatten)]
    pub pair: AlignedPair,
    pub flags: Vec<QualityFlag>,
    pub intermediate: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_log_ref: Option<String>,
}

impl From<&GenerationResult> for SilverRecord {
    fn from(r: &GenerationResult) -> Self {
        SilverRecord {
            pair: r.pair.clone(),
            flags: r.flags.iter().copied().collect(),
            intermediate: r.intermediate_outputs.clone(),
            raw_log_ref: Some(r.raw_log_ref.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRecord {
    pub id: String,
    pub source: String,
    pub stage: Option<usize>,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
struct RawLogEntry<'a> {
    raw_log_ref: &'a str,
    id: &'a str,
    stage: usize,
    template_version: &'a str,
    prompt: &'a str,
    output: &'a str,
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub workers: usize,
    /// Requests per second across all workers; `None` is unlimited.
    pub rps: Option<f64>,
    pub params: ModelParams,
    pub retry: RetryPolicy,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            workers: 4,
            rps: None,
            params: ModelParams::default(),
            retry: RetryPolicy::default(),
        }
    }
}

/// Counts over the output file after the run, plus the work done in it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub succeeded: usize,
    pub flagged: usize,
    pub failed: usize,
    /// Inputs already present in the output file before this run.
    pub skipped: usize,
    /// Completion requests issued by this run, retries included.
    pub requests: usize,
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

/// `<out stem>.failed.jsonl` next to the output file.
pub fn failures_path(out: &Path) -> PathBuf {
    sidecar(out, ".failed.jsonl")
}

/// `<out stem>.log.jsonl`: every prompt and completion, keyed by raw log ref.
pub fn raw_log_path(out: &Path) -> PathBuf {
    sidecar(out, ".log.jsonl")
}

/// Reads a silver file left by an earlier run. A truncated last line is
/// dropped.
fn read_existing(out: &Path) -> Result<Vec<SilverRecord>> {
    let file = match File::open(out) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(out, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(out, e))?;
    let mut records = Vec::new();
    let last = lines.len().saturating_sub(1);
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SilverRecord>(line) {
            Ok(r) => records.push(r),
            Err(e) if idx == last => {
                log::warn!("{}: dropping truncated last line: {e}", out.display())
            }
            Err(e) => {
                return Err(Error::Parse {
                    path: out.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

struct Counting<'a> {
    inner: &'a dyn CompletionClient,
    calls: AtomicUsize,
}

impl CompletionClient for Counting<'_> {
    fn complete(
        &self,
        request: &CompletionRequest,
    ) -> std::result::Result<String, CompletionError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(request)
    }
}

struct RunState {
    journal: File,
    raw_log: File,
    done: BTreeMap<String, SilverRecord>,
    failed: Vec<FailedRecord>,
}

impl RunState {
    fn record(
        &mut self,
        result: &GenerationResult,
        stages: &[PromptTemplate],
        out: &Path,
    ) -> Result<()> {
        for (idx, (prompt, output)) in result
            .prompts
            .iter()
            .zip(&result.intermediate_outputs)
            .enumerate()
        {
            let entry = RawLogEntry {
                raw_log_ref: &result.raw_log_ref,
                id: &result.pair.id,
                stage: idx + 1,
                template_version: &stages[idx].version,
                prompt,
                output,
            };
            let line = serde_json::to_string(&entry).expect("serializable log entry");
            writeln!(self.raw_log, "{line}").map_err(|e| Error::io(raw_log_path(out), e))?;
        }
        let record = SilverRecord::from(result);
        let line = serde_json::to_string(&record).expect("serializable record");
        writeln!(self.journal, "{line}").map_err(|e| Error::io(out, e))?;
        self.done.insert(record.pair.id.clone(), record);
        Ok(())
    }
}

fn append(path: &Path) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))
}

/// Generates silver pairs for every sentence not already in `out`.
///
/// Results are journaled to `out` as they complete and the file is
/// rewritten in id order at the end. Failures go to [`failures_path`] and
/// are retried on the next run.
pub fn batch_generate(
    sentences: &[SentenceRecord],
    stages: &[PromptTemplate],
    client: &dyn CompletionClient,
    config: &BatchConfig,
    out: &Path,
) -> Result<RunSummary> {
    if stages.is_empty() {
        return Err(Error::Invalid("at least one template is required".into()));
    }
    let mut ids = HashSet::new();
    if let Some(dup) = sentences.iter().find(|s| !ids.insert(s.id.as_str())) {
        return Err(Error::DuplicateId(dup.id.clone()));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let existing = read_existing(out)?;
    let current_text: BTreeMap<&str, &str> = sentences
        .iter()
        .map(|s| (s.id.as_str(), s.text.as_str()))
        .collect();
    let mut done = BTreeMap::new();
    for record in existing {
        // a record whose input sentence has changed is regenerated
        if current_text
            .get(record.pair.id.as_str())
            .is_some_and(|t| *t != record.pair.source)
        {
            continue;
        }
        done.insert(record.pair.id.clone(), record);
    }
    let todo: Vec<&SentenceRecord> = sentences
        .iter()
        .filter(|s| !done.contains_key(&s.id))
        .collect();
    let skipped = sentences.len() - todo.len();

    // rewrite the (possibly pruned) journal before appending to it
    jsonl::write_records(out, &done.values().cloned().collect::<Vec<_>>())?;
    let state = Mutex::new(RunState {
        journal: append(out)?,
        raw_log: append(&raw_log_path(out))?,
        done,
        failed: Vec::new(),
    });

    let counting = Counting {
        inner: client,
        calls: AtomicUsize::new(0),
    };
    let limiter = config.rps.map(RateLimiter::per_second);
    let options = PipelineOptions {
        params: config.params.clone(),
        retry: config.retry,
        limiter: limiter.as_ref(),
    };
    let next = AtomicUsize::new(0);
    let io_error: Mutex<Option<Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..config.workers.clamp(1, todo.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(sentence) = todo.get(i) else { break };
                match run_pipeline(sentence, stages, &counting, &options) {
                    Ok(result) => {
                        if let Err(e) = state.lock().record(&result, stages, out) {
                            io_error.lock().get_or_insert(e);
                            break;
                        }
                    }
                    Err(e) => {
                        let stage = match &e {
                            Error::Stage { stage, .. } => Some(*stage),
                            _ => None,
                        };
                        log::warn!("generation failed for `{}`: {e}", sentence.id);
                        state.lock().failed.push(FailedRecord {
                            id: sentence.id.clone(),
                            source: sentence.text.clone(),
                            stage,
                            error: e.to_string(),
                        });
                    }
                }
            });
        }
    });

    if let Some(e) = io_error.into_inner() {
        return Err(e);
    }
    let RunState {
        journal,
        raw_log,
        done,
        mut failed,
    } = state.into_inner();
    drop((journal, raw_log));

    let records: Vec<SilverRecord> = done.into_values().collect();
    jsonl::write_records(out, &records)?;
    failed.sort_by(|a, b| a.id.cmp(&b.id));
    jsonl::write_records(&failures_path(out), &failed)?;

    let flagged = records.iter().filter(|r| !r.flags.is_empty()).count();
    Ok(RunSummary {
        succeeded: records.len() - flagged,
        flagged,
        failed: failed.len(),
        skipped,
        requests: counting.calls.into_inner(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promptgen::testing::{sentence_of, ScriptedClient};
    use std::time::Duration;

    fn sentences(n: usize) -> Vec<SentenceRecord> {
        (0..n)
            .map(|i| {
                SentenceRecord::new(
                    format!("s{i:02}"),
                    &format!("Lause number {i} on üsna pikk ja keeruline."),
                )
            })
            .collect()
    }

    fn config(workers: usize) -> BatchConfig {
        BatchConfig {
            workers,
            retry: RetryPolicy {
                max_attempts: 3,
                backoff_base: Duration::from_millis(1),
            },
            ..Default::default()
        }
    }

    /// Shortens every sentence except the listed ids, which fail fatally.
    struct Shortener {
        fail: Vec<&'static str>,
    }

    impl CompletionClient for Shortener {
        fn complete(
            &self,
            request: &CompletionRequest,
        ) -> std::result::Result<String, CompletionError> {
            let sentence = sentence_of(request);
            if self.fail.iter().any(|id| sentence.contains(id)) {
                return Err(CompletionError::Fatal("boom".into()));
            }
            Ok(sentence
                .split_whitespace()
                .take(3)
                .collect::<Vec<_>>()
                .join(" ")
                + ".")
        }
    }

    #[test]
    fn output_sorted_and_resumable() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("silver.jsonl");
        let input = sentences(12);
        let templates = [PromptTemplate::builtin("lexical").unwrap()];
        let client = Shortener { fail: vec![] };
        let summary = batch_generate(&input, &templates, &client, &config(4), &out).unwrap();
        assert_eq!(
            (summary.succeeded, summary.flagged, summary.failed),
            (12, 0, 0)
        );
        assert_eq!(summary.requests, 12);

        let records: Vec<SilverRecord> = jsonl::read_records(&out).unwrap();
        let ids: Vec<&str> = records.iter().map(|r| r.pair.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        for (r, s) in records.iter().zip(&input) {
            assert_eq!(r.pair.source, s.text);
        }

        let again = batch_generate(&input, &templates, &client, &config(4), &out).unwrap();
        assert_eq!(again.requests, 0);
        assert_eq!(again.skipped, 12);
        assert_eq!(again.succeeded, 12);
    }

    #[test]
    fn failures_recorded_and_retried_next_run() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("silver.jsonl");
        let input = sentences(5);
        let templates = [PromptTemplate::builtin("lexical").unwrap()];
        let summary = batch_generate(
            &input,
            &templates,
            &Shortener {
                fail: vec!["number 3"],
            },
            &config(2),
            &out,
        )
        .unwrap();
        assert_eq!((summary.succeeded, summary.failed), (4, 1));
        let failed: Vec<FailedRecord> = jsonl::read_records(&failures_path(&out)).unwrap();
        assert_eq!(failed[0].id, "s03");
        assert_eq!(failed[0].stage, Some(1));

        let summary = batch_generate(
            &input,
            &templates,
            &Shortener { fail: vec![] },
            &config(2),
            &out,
        )
        .unwrap();
        assert_eq!(
            (summary.succeeded, summary.failed, summary.requests),
            (5, 0, 1)
        );
        assert!(jsonl::read_records::<FailedRecord>(&failures_path(&out))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn truncated_journal_line_is_regenerated() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("silver.jsonl");
        let input = sentences(3);
        let templates = [PromptTemplate::builtin("v1").unwrap()];
        let client = Shortener { fail: vec![] };
        batch_generate(&input, &templates, &client, &config(1), &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let cut = text.trim_end().rfind('\n').unwrap() + 10;
        std::fs::write(&out, &text[..cut]).unwrap();
        let summary = batch_generate(&input, &templates, &client, &config(1), &out).unwrap();
        assert_eq!(
            (summary.skipped, summary.requests, summary.succeeded),
            (2, 1, 3)
        );
    }

    #[test]
    fn changed_source_is_regenerated() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("silver.jsonl");
        let mut input = sentences(2);
        let templates = [PromptTemplate::builtin("v1").unwrap()];
        batch_generate(
            &input,
            &templates,
            &ScriptedClient::replies(["A.", "B."]),
            &config(1),
            &out,
        )
        .unwrap();
        input[1] = SentenceRecord::new("s01", "Täiesti uus lause, mida varem polnud.");
        let summary = batch_generate(
            &input,
            &templates,
            &ScriptedClient::replies(["C."]),
            &config(1),
            &out,
        )
        .unwrap();
        assert_eq!(summary.requests, 1);
        let records: Vec<SilverRecord> = jsonl::read_records(&out).unwrap();
        assert_eq!(
            records[1].pair.source,
            "Täiesti uus lause, mida varem polnud."
        );
    }

    #[test]
    fn silver_line_has_pair_fields_and_extras() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("silver.jsonl");
        batch_generate(
            &sentences(1),
            &[PromptTemplate::builtin("lexical").unwrap()],
            &ScriptedClient::echo(),
            &config(1),
            &out,
        )
        .unwrap();
        let line = std::fs::read_to_string(&out).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for key in [
            "id",
            "source",
            "simple",
            "origin",
            "template_version",
            "corrected",
            "flags",
            "intermediate",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["flags"], serde_json::json!(["identical_output"]));
        // the silver line also parses as a plain pair
        let pair: AlignedPair = serde_json::from_value(v).unwrap();
        pair.validate().unwrap();
    }

    #[test]
    fn duplicate_input_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut input = sentences(2);
        input[1].id = input[0].id.clone();
        let err = batch_generate(
            &input,
            &[PromptTemplate::builtin("v1").unwrap()],
            &ScriptedClient::echo(),
            &config(1),
            &dir.path().join("o.jsonl"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }
}
