use std::cmp::Ordering;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::backend::FileMapBackend;
use super::run::{run_eval, test_set_hash, EvalConfig, TestItem};
use crate::error::{Error, Result};
use crate::metrics::{Language, MetricReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMetric {
    #[default]
    Sari,
    Bleu,
}

impl SelectionMetric {
    pub fn of(self, report: &MetricReport) -> f64 {
        match self {
            SelectionMetric::Sari => report.sari,
            SelectionMetric::Bleu => report.bleu,
        }
    }
}

impl fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMetric::Sari => "sari",
            SelectionMetric::Bleu => "bleu",
        })
    }
}

impl FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sari" => Ok(SelectionMetric::Sari),
            "bleu" => Ok(SelectionMetric::Bleu),
            _ => Err(Error::Invalid(format!(
                "selection metric must be sari or bleu, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub name: String,
    pub outputs: PathBuf,
}

/// Compares names so that `ckpt2` sorts before `ckpt10`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            ((true, dx), (true, dy)) => {
                let (tx, ty) = (dx.trim_start_matches('0'), dy.trim_start_matches('0'));
                tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
            }
            ((_, sx), (_, sy)) => sx.cmp(sy),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Every `*.jsonl` file in `dir`, named by file stem, in natural order.
pub fn discover_checkpoints(dir: &Path) -> Result<Vec<Checkpoint>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "jsonl") {
            let name = path
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            found.push(Checkpoint {
                name,
                outputs: path,
            });
        }
    }
    if found.is_empty() {
        return Err(Error::Invalid(format!(
            "no checkpoint output files (*.jsonl) in {}",
            dir.display()
        )));
    }
    found.sort_by(|a, b| natural_cmp(&a.name, &b.name));
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCheckpoint {
    pub rank: usize,
    pub name: String,
    pub bleu: f64,
    pub sari: f64,
    pub fkgl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metric: SelectionMetric,
    pub best: String,
    pub test_set_hash: String,
    pub ranking: Vec<RankedCheckpoint>,
}

/// Sorts scored checkpoints by `metric`, best first. The sort is stable, so
/// ties keep input order.
pub fn rank_reports(
    scored: &[(String, MetricReport)],
    metric: SelectionMetric,
) -> Vec<RankedCheckpoint> {
    let mut order: Vec<&(String, MetricReport)> = scored.iter().collect();
    order.sort_by(|a, b| metric.of(&b.1).total_cmp(&metric.of(&a.1)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, (name, r))| RankedCheckpoint {
            rank: i + 1,
            name: name.clone(),
            bleu: r.bleu,
            sari: r.sari,
            fkgl: r.fkgl,
        })
        .collect()
}

/// Scores every checkpoint's outputs on the test set and ranks them.
pub fn checkpoint_sweep(
    checkpoints: &[Checkpoint],
    items: &[TestItem],
    metric: SelectionMetric,
    language: Language,
) -> Result<SweepResult> {
    if checkpoints.is_empty() {
        return Err(Error::EmptyInput("a checkpoint sweep"));
    }
    let mut scored = Vec::with_capacity(checkpoints.len());
    for ckpt in checkpoints {
        let backend = FileMapBackend::load(&ckpt.outputs)?;
        let config = EvalConfig {
            language,
            timestamp: false,
            ..EvalConfig::new(&ckpt.name, format!("file:{}", ckpt.outputs.display()))
        };
        let result = run_eval(&backend, items, &config)
            .inspect_err(|e| log::error!("checkpoint `{}`: {e}", ckpt.name))?;
        scored.push((ckpt.name.clone(), result.report));
    }
    let ranking = rank_reports(&scored, metric);
    Ok(SweepResult {
        metric,
        best: ranking[0].name.clone(),
        test_set_hash: test_set_hash(items),
        ranking,
    })
}
