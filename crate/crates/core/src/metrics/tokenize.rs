use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    /// Lowercased, each punctuation character its own token.
    #[default]
    Metric,
    /// Whitespace split only.
    Raw,
}

impl fmt::Display for TokenizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizeMode::Metric => "metric",
            TokenizeMode::Raw => "raw",
        })
    }
}

impl FromStr for TokenizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "metric" => Ok(TokenizeMode::Metric),
            "raw" => Ok(TokenizeMode::Raw),
            _ => Err(Error::Invalid(format!("unknown tokenizer mode `{s}`"))),
        }
    }
}

/// Non-empty, whitespace-free tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

fn is_word_char(c: char) -> bool {
    // combining diacritics stay attached to their base letter
    c.is_alphanumeric() || ('\u{0300}'..='\u{036F}').contains(&c)
}

pub fn tokenize(text: &str, mode: TokenizeMode) -> TokenSequence {
    match mode {
        TokenizeMode::Raw => TokenSequence(text.split_whitespace().map(str::to_owned).collect()),
        TokenizeMode::Metric => {
            let mut tokens = Vec::new();
            let mut current = String::new();
            for c in text.to_lowercase().chars() {
                if is_word_char(c) {
                    current.push(c);
                    continue;
                }
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                if !c.is_whitespace() {
                    tokens.push(c.to_string());
                }
            }
            if !current.is_empty() {
                tokens.push(current);
            }
            TokenSequence(tokens)
        }
    }
}
