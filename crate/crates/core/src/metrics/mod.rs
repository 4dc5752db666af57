//! Multi-reference BLEU, SARI and FKGL.

mod bleu;
mod ngram;
mod readability;
mod sari;
mod tokenize;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu_corpus, sentence_bleu, BleuStats, DEFAULT_MAX_N};
pub use readability::{
    count_syllables, fkgl, readability_stats, Language, TokenStats, FKGL_CAVEAT,
};
pub use sari::{sari_corpus, sari_sentence, SariComponents, SariScore};
pub use tokenize::{tokenize, TokenSequence, TokenizeMode};

use bleu::bleu_tokenized;
pub(crate) use bleu::sentence_bleu_tokenized;
pub(crate) use sari::sari_instance;

use crate::error::{Error, Result};
use crate::jsonl;

/// An input sentence, a system output, and one or more references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub id: String,
    pub input: String,
    pub output: String,
    pub references: Vec<String>,
}

impl EvalInstance {
    pub fn new<I, S>(
        id: impl Into<String>,
        input: impl Into<String>,
        output: impl Into<String>,
        references: I,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        EvalInstance {
            id: id.into(),
            input: input.into(),
            output: output.into(),
            references: references.into_iter().map(Into::into).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.references.is_empty() {
            return Err(Error::Invalid(format!(
                "instance `{}` has no references",
                self.id
            )));
        }
        let blank = |s: &String| s.trim().is_empty();
        if blank(&self.input) || blank(&self.output) || self.references.iter().any(blank) {
            return Err(Error::Invalid(format!(
                "instance `{}` has an empty text",
                self.id
            )));
        }
        Ok(())
    }
}

/// Metric-mode tokens of one instance.
#[derive(Debug, Clone)]
pub(crate) struct TokenizedInstance {
    pub input: Vec<String>,
    pub output: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl TokenizedInstance {
    pub fn new(inst: &EvalInstance) -> Result<Self> {
        inst.validate()?;
        let tok = |s: &str| tokenize(s, TokenizeMode::Metric).into_inner();
        Ok(TokenizedInstance {
            input: tok(&inst.input),
            output: tok(&inst.output),
            references: inst.references.iter().map(|r| tok(r)).collect(),
        })
    }

    pub fn all(instances: &[EvalInstance]) -> Result<Vec<Self>> {
        instances.iter().map(Self::new).collect()
    }
}

/// Corpus-level scores for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub sari: f64,
    pub sari_components: SariComponents,
    pub fkgl: f64,
    pub n_instances: usize,
    pub token_stats: TokenStats,
    pub fkgl_note: String,
}

/// Scores a corpus. Instances are aggregated in id order, so the result
/// does not depend on file order.
pub fn score_instances(instances: &[EvalInstance], language: Language) -> Result<MetricReport> {
    if instances.is_empty() {
        return Err(Error::EmptyInput("a metric report"));
    }
    let mut ordered: Vec<&EvalInstance> = instances.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let owned: Vec<EvalInstance> = ordered.into_iter().cloned().collect();
    let tokenized = TokenizedInstance::all(&owned)?;
    report_from_tokenized(&owned, &tokenized, language)
}

/// Report over instances already in aggregation order, with their tokens.
pub(crate) fn report_from_tokenized(
    instances: &[EvalInstance],
    tokenized: &[TokenizedInstance],
    language: Language,
) -> Result<MetricReport> {
    let bleu = bleu_tokenized(tokenized, DEFAULT_MAX_N)?;
    let sari = sari::sari_tokenized(tokenized)?;
    let outputs: Vec<&str> = instances.iter().map(|i| i.output.as_str()).collect();
    let token_stats = readability_stats(&outputs, language);
    Ok(MetricReport {
        bleu,
        sari: sari.sari,
        sari_components: sari.components,
        fkgl: token_stats.grade()?,
        n_instances: instances.len(),
        token_stats,
        fkgl_note: FKGL_CAVEAT.to_string(),
    })
}

/// The report as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub toolkit_version: String,
    pub tokenizer: TokenizeMode,
    pub language: Language,
    #[serde(flatten)]
    pub report: MetricReport,
}

impl ReportFile {
    pub fn new(report: MetricReport, language: Language) -> Self {
        ReportFile {
            toolkit_version: crate::VERSION.to_string(),
            tokenizer: TokenizeMode::Metric,
            language,
            report,
        }
    }
}

impl MetricReport {
    /// Two-decimal summary for terminals.
    pub fn summary(&self) -> String {
        format!(
            "BLEU {:.2}  SARI {:.2} (add {:.2} keep {:.2} del {:.2})  FKGL {:.2} [{}]  n={}",
            self.bleu,
            self.sari,
            self.sari_components.f_add,
            self.sari_components.f_keep,
            self.sari_components.p_del,
            self.fkgl,
            self.fkgl_note,
            self.n_instances
        )
    }
}

pub fn read_instances(path: &Path) -> Result<Vec<EvalInstance>> {
    jsonl::read_records(path)
}
