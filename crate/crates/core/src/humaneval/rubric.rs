use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

pub const MAX_SCORE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    G,
    R,
    M,
    S,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::G, Criterion::R, Criterion::M, Criterion::S];

    pub fn code(self) -> &'static str {
        match self {
            Criterion::G => "G",
            Criterion::R => "R",
            Criterion::M => "M",
            Criterion::S => "S",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::G => "Grammaticality",
            Criterion::R => "Readability",
            Criterion::M => "Preservation of Meaning",
            Criterion::S => "Simplification",
        }
    }

    /// Descriptor texts for levels 0 through 4.
    pub fn descriptors(self) -> [&'static str; 5] {
        match self {
            Criterion::G => [
                "The text contains numerous grammatical mistakes, making it unreadable.",
                "There are significant grammatical errors, making the sentence difficult to understand.",
                "A few errors are present but do not heavily hinder understanding.",
                "Minor grammatical mistakes that do not affect understanding.",
                "The grammar is perfect, with no mistakes.",
            ],
            Criterion::R => [
                "The text is completely incoherent and unreadable.",
                "It is very difficult to read and understand.",
                "The text is readable but requires significant effort.",
                "The text is mostly coherent, with minor effort required to understand.",
                "The text is very easy to read and understand, flowing naturally.",
            ],
            Criterion::M => [
                "The meaning is completely lost, with significant changes in the text.",
                "The meaning is poorly preserved, with significant loss of information.",
                "The meaning is somewhat preserved, but important details are missing.",
                "The meaning is mostly preserved, with only minor information loss.",
                "The meaning is fully preserved, with no loss of key information.",
            ],
            Criterion::S => [
                "The text is not simplified or is more difficult to understand.",
                "Simplification is poor, with only slight improvement in ease of understanding.",
                "The text is somewhat easier to understand.",
                "Good simplification, making the text easier to understand.",
                "Excellent simplification, with the text significantly easier to understand while retaining meaning.",
            ],
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.code() == s)
            .ok_or_else(|| format!("unknown criterion `{s}`"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RubricLevel {
    pub score: u8,
    pub descriptor: &'static str,
}

/// One criterion with its level descriptors, as served to annotators.
#[derive(Debug, Clone, Serialize)]
pub struct RubricCriterion {
    pub code: Criterion,
    pub name: &'static str,
    pub levels: Vec<RubricLevel>,
}

pub fn rubric() -> Vec<RubricCriterion> {
    Criterion::ALL
        .into_iter()
        .map(|c| RubricCriterion {
            code: c,
            name: c.name(),
            levels: c
                .descriptors()
                .into_iter()
                .enumerate()
                .map(|(i, d)| RubricLevel {
                    score: i as u8,
                    descriptor: d,
                })
                .collect(),
        })
        .collect()
}

/// A problem with submitted scores, naming the criterion where possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreError {
    pub criterion: Option<Criterion>,
    pub message: String,
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// A complete G/R/M/S score set, each in `0..=4`.
///
/// Serialized as `{"G": 3, "R": 3, "M": 4, "S": 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scores([u8; 4]);

impl Scores {
    pub fn new(g: u8, r: u8, m: u8, s: u8) -> Result<Self, ScoreError> {
        let scores = Scores([g, r, m, s]);
        for c in Criterion::ALL {
            if scores.get(c) > MAX_SCORE {
                return Err(ScoreError {
                    criterion: Some(c),
                    message: format!("{c} score {} is outside 0..{MAX_SCORE}", scores.get(c)),
                });
            }
        }
        Ok(scores)
    }

    pub fn uniform(score: u8) -> Result<Self, ScoreError> {
        Self::new(score, score, score, score)
    }

    pub fn get(&self, c: Criterion) -> u8 {
        self.0[c.index()]
    }

    /// Parses and validates a JSON object of scores.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, ScoreError> {
        let map = value.as_object().ok_or_else(|| ScoreError {
            criterion: None,
            message: "scores must be an object with keys G, R, M, S".into(),
        })?;
        if let Some(key) = map.keys().find(|k| k.parse::<Criterion>().is_err()) {
            return Err(ScoreError {
                criterion: None,
                message: format!("unknown criterion `{key}` in scores"),
            });
        }
        let mut out = [0u8; 4];
        for c in Criterion::ALL {
            let v = map.get(c.code()).ok_or_else(|| ScoreError {
                criterion: Some(c),
                message: format!("missing score for {c}"),
            })?;
            out[c.index()] = v
                .as_u64()
                .filter(|n| *n <= MAX_SCORE as u64)
                .ok_or_else(|| ScoreError {
                    criterion: Some(c),
                    message: format!("{c} score {v} is not an integer in 0..{MAX_SCORE}"),
                })? as u8;
        }
        Ok(Scores(out))
    }

    /// Criteria on which `self` and `other` differ.
    pub fn differing(&self, other: &Scores) -> Vec<Criterion> {
        Criterion::ALL
            .into_iter()
            .filter(|c| self.get(*c) != other.get(*c))
            .collect()
    }
}

impl Serialize for Scores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        for c in Criterion::ALL {
            map.serialize_entry(c.code(), &self.get(c))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Scores {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        Scores::from_json(&value).map_err(de::Error::custom)
    }
}
