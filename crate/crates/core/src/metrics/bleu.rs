//! Corpus BLEU with clipped n-gram counts pooled over all instances.

use super::ngram::counts;
use super::{EvalInstance, TokenizedInstance};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_N: usize = 4;

/// Sufficient statistics for corpus BLEU.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    pub fn new(max_n: usize) -> Self {
        BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            candidate_len: 0,
            reference_len: 0,
        }
    }

    pub(crate) fn add(&mut self, inst: &TokenizedInstance) {
        let cand = &inst.output;
        for n in 1..=self.matches.len() {
            let cand_counts = counts(cand, n, 1);
            let ref_counts: Vec<_> = inst.references.iter().map(|r| counts(r, n, 1)).collect();
            for (gram, &c) in &cand_counts {
                let clip = ref_counts
                    .iter()
                    .map(|rc| rc.get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                self.matches[n - 1] += c.min(clip);
            }
            self.totals[n - 1] += cand.len().saturating_sub(n - 1);
        }
        self.candidate_len += cand.len();
        self.reference_len += closest_ref_len(cand.len(), &inst.references);
    }

    /// BLEU in `[0, 100]`. Zero when any order has no matches, or when an
    /// order has no candidate n-grams at all.
    pub fn score(&self) -> f64 {
        let max_n = self.matches.len();
        if self
            .matches
            .iter()
            .zip(&self.totals)
            .any(|(&m, &t)| m == 0 || t == 0)
        {
            return 0.0;
        }
        let log_sum: f64 = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| (m as f64 / t as f64).ln())
            .sum();
        100.0
            * brevity_penalty(self.candidate_len, self.reference_len)
            * (log_sum / max_n as f64).exp()
    }
}

/// Reference length closest to the candidate length; ties go to the shorter.
fn closest_ref_len(cand_len: usize, refs: &[Vec<String>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(cand_len), len))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        return 0.0;
    }
    if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

pub fn bleu_corpus(instances: &[EvalInstance], max_n: usize) -> Result<f64> {
    let tokenized = TokenizedInstance::all(instances)?;
    bleu_tokenized(&tokenized, max_n)
}

pub(crate) fn bleu_tokenized(instances: &[TokenizedInstance], max_n: usize) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::EmptyInput("BLEU"));
    }
    if max_n == 0 {
        return Err(Error::Invalid("BLEU max_n must be at least 1".into()));
    }
    let mut stats = BleuStats::new(max_n);
    for inst in instances {
        stats.add(inst);
    }
    Ok(stats.score())
}

/// Sentence BLEU with add-one smoothing for orders two and up. For
/// diagnostics only.
pub(crate) fn sentence_bleu_tokenized(inst: &TokenizedInstance, max_n: usize) -> f64 {
    let mut stats = BleuStats::new(max_n);
    stats.add(inst);
    if stats.matches[0] == 0 {
        return 0.0;
    }
    let log_sum: f64 = (0..max_n)
        .map(|i| {
            let (m, t) = (stats.matches[i] as f64, stats.totals[i] as f64);
            if i == 0 {
                (m / t).ln()
            } else {
                ((m + 1.0) / (t + 1.0)).ln()
            }
        })
        .sum();
    100.0
        * brevity_penalty(stats.candidate_len, stats.reference_len)
        * (log_sum / max_n as f64).exp()
}

pub fn sentence_bleu(instance: &EvalInstance) -> Result<f64> {
    let inst = TokenizedInstance::new(instance)?;
    Ok(sentence_bleu_tokenized(&inst, DEFAULT_MAX_N))
}
