use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sentence cut from an article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub text: String,
    pub word_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_id: Option<String>,
    /// Offset of the first character of the sentence in its article, in chars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_offset: Option<usize>,
}

impl SentenceRecord {
    pub fn new(id: impl Into<String>, text: &str) -> Self {
        let text = normalize_space(text);
        SentenceRecord {
            id: id.into(),
            word_count: word_count(&text),
            text,
            article_id: None,
            char_offset: None,
        }
    }
}

/// Number of maximal whitespace-delimited tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn normalize_space(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Common Estonian and English abbreviations that end in a period.
const ESTONIAN_ABBREVIATIONS: &[&str] = &[
    "nt.", "jne.", "jm.", "jt.", "vms.", "vm.", "st.", "s.t.", "nn.", "lk.", "u.", "ca.", "dr.",
    "hr.", "pr.", "prl.", "mnt.", "tn.", "vrd.", "k.a.", "sh.", "sealh.", "tel.", "nr.", "mr.",
    "mrs.", "e.g.", "i.e.", "etc.", "vs.",
];

/// Abbreviation list consulted before splitting after a period.
#[derive(Debug, Clone, Default)]
pub struct SegmentationRules {
    abbreviations: HashSet<String>,
}

impl SegmentationRules {
    pub fn new<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let abbreviations = abbreviations
            .into_iter()
            .map(|a| {
                let mut a = a.as_ref().trim().to_lowercase();
                if !a.ends_with('.') {
                    a.push('.');
                }
                a
            })
            .filter(|a| a.len() > 1)
            .collect();
        SegmentationRules { abbreviations }
    }

    pub fn estonian() -> Self {
        Self::new(ESTONIAN_ABBREVIATIONS)
    }

    /// One abbreviation per line; blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    /// Union of both lists.
    pub fn merge(mut self, other: SegmentationRules) -> Self {
        self.abbreviations.extend(other.abbreviations);
        self
    }

    pub fn is_abbreviation(&self, token: &str) -> bool {
        self.abbreviations.contains(&token.to_lowercase())
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | '»' | ')' | ']')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '„' | '“' | '‘' | '«' | '(' | '[')
}

/// Char ranges `[start, end)` of the sentences in `chars`.
fn sentence_spans(chars: &[char], rules: &SegmentationRules) -> Vec<(usize, usize)> {
    let mut cuts = Vec::new();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            // a blank line always ends the sentence
            let start = i;
            let mut newlines = 0;
            while i < n && chars[i].is_whitespace() {
                if chars[i] == '\n' {
                    newlines += 1;
                }
                i += 1;
            }
            if newlines >= 2 {
                cuts.push(start);
            }
            continue;
        }
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < n && (is_terminal(chars[j]) || is_closing(chars[j])) {
            j += 1;
        }
        if j >= n || !chars[j].is_whitespace() {
            i = j;
            continue;
        }
        let mut k = j;
        while k < n && chars[k].is_whitespace() {
            k += 1;
        }
        let next_starts_sentence = k < n && (chars[k].is_uppercase() || is_opening(chars[k]));
        let abbreviated = c == '.' && j == i + 1 && {
            let word_start = chars[..i]
                .iter()
                .rposition(|ch| ch.is_whitespace())
                .map_or(0, |p| p + 1);
            let token: String = chars[word_start..=i]
                .iter()
                .skip_while(|ch| is_opening(**ch))
                .collect();
            rules.is_abbreviation(&token)
        };
        if next_starts_sentence && !abbreviated {
            cuts.push(j);
        }
        i = j;
    }

    let mut spans = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for cut in cuts.into_iter().chain(std::iter::once(n)) {
        if cut > start {
            spans.push((start, cut));
        }
        start = cut;
    }
    spans
}

/// Splits a document into sentences.
///
/// A sentence ends after `.`, `!` or `?` (plus any closing quotes or
/// brackets) when whitespace and then an uppercase letter or an opening
/// quote follow, unless the token ending in the period is a listed
/// abbreviation. A blank line ends a sentence unconditionally.
pub fn segment_sentences(document: &str, rules: &SegmentationRules) -> Vec<SentenceRecord> {
    segment_article(document, None, rules)
}

/// Like [`segment_sentences`], with ids derived from the article id.
pub fn segment_article(
    document: &str,
    article_id: Option<&str>,
    rules: &SegmentationRules,
) -> Vec<SentenceRecord> {
    let chars: Vec<char> = document.chars().collect();
    let prefix = article_id.unwrap_or("s");
    sentence_spans(&chars, rules)
        .into_iter()
        .filter_map(|(start, end)| {
            let raw: String = chars[start..end].iter().collect();
            let text = normalize_space(&raw);
            if text.is_empty() {
                return None;
            }
            let offset = start
                + chars[start..end]
                    .iter()
                    .take_while(|c| c.is_whitespace())
                    .count();
            Some((text, offset))
        })
        .enumerate()
        .map(|(idx, (text, offset))| SentenceRecord {
            id: format!("{prefix}-{:05}", idx + 1),
            word_count: word_count(&text),
            text,
            article_id: article_id.map(str::to_owned),
            char_offset: Some(offset),
        })
        .collect()
}

/// Keeps records with at least `min_words` words, in their original order.
///
/// A threshold of 0 keeps everything.
pub fn filter_candidates(records: &[SentenceRecord], min_words: usize) -> Vec<SentenceRecord> {
    records
        .iter()
        .filter(|r| r.word_count >= min_words)
        .cloned()
        .collect()
}
