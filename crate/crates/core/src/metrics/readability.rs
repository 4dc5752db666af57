//! Flesch-Kincaid Grade Level with a vowel-run syllable counter.
//!
//! The formula was calibrated on English; applied to Estonian it is an
//! approximation, and the syllable counts are heuristic either way.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, TokenizeMode};
use crate::corpus::{segment_sentences, SegmentationRules};
use crate::error::{Error, Result};

pub const FKGL_CAVEAT: &str = "English-calibrated formula, heuristic syllables";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    Et,
    En,
}

impl Language {
    fn is_vowel(self, c: char) -> bool {
        match self {
            Language::Et => matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'õ' | 'ä' | 'ö' | 'ü'),
            Language::En => matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Et => "et",
            Language::En => "en",
        })
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "et" => Ok(Language::Et),
            "en" => Ok(Language::En),
            _ => Err(Error::Invalid(format!(
                "unsupported language `{s}` (expected et or en)"
            ))),
        }
    }
}

/// Number of maximal vowel runs, at least 1.
pub fn count_syllables(word: &str, language: Language) -> Result<usize> {
    if !word.chars().any(char::is_alphabetic) {
        return Err(Error::Invalid(format!("`{word}` contains no letters")));
    }
    let mut runs = 0;
    let mut in_run = false;
    for c in word.chars().flat_map(char::to_lowercase) {
        let vowel = language.is_vowel(c);
        if vowel && !in_run {
            runs += 1;
        }
        in_run = vowel;
    }
    Ok(runs.max(1))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStats {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

impl TokenStats {
    /// Stats for one text. Tokens without letters count as words with no
    /// syllables.
    pub fn of_text(text: &str, language: Language, rules: &SegmentationRules) -> Self {
        let words = tokenize(text, TokenizeMode::Raw);
        let syllables = words
            .tokens()
            .iter()
            .filter_map(|w| count_syllables(w, language).ok())
            .sum();
        TokenStats {
            words: words.len(),
            sentences: segment_sentences(text, rules).len(),
            syllables,
        }
    }

    pub fn merge(&mut self, other: TokenStats) {
        self.words += other.words;
        self.sentences += other.sentences;
        self.syllables += other.syllables;
    }

    pub fn grade(&self) -> Result<f64> {
        if self.words == 0 || self.sentences == 0 {
            return Err(Error::Invalid("FKGL needs at least one word".into()));
        }
        let words = self.words as f64;
        Ok(0.39 * (words / self.sentences as f64) + 11.8 * (self.syllables as f64 / words) - 15.59)
    }
}

/// Pooled word, sentence, and syllable totals over all outputs.
pub fn readability_stats(outputs: &[&str], language: Language) -> TokenStats {
    let rules = SegmentationRules::estonian();
    let mut stats = TokenStats::default();
    for text in outputs {
        stats.merge(TokenStats::of_text(text, language, &rules));
    }
    stats
}

pub fn fkgl(outputs: &[&str], language: Language) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::EmptyInput("FKGL"));
    }
    readability_stats(outputs, language).grade()
}
