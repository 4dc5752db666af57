use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where an aligned pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Turk,
    Wiki2,
    LlmV1,
    LlmAgents,
    Manual,
}

impl Origin {
    pub const ALL: [Origin; 5] = [
        Origin::Turk,
        Origin::Wiki2,
        Origin::LlmV1,
        Origin::LlmAgents,
        Origin::Manual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Turk => "turk",
            Origin::Wiki2 => "wiki2",
            Origin::LlmV1 => "llm_v1",
            Origin::LlmAgents => "llm_agents",
            Origin::Manual => "manual",
        }
    }

    pub fn is_llm(self) -> bool {
        matches!(self, Origin::LlmV1 | Origin::LlmAgents)
    }

    /// `v1`, `v1-…` and `v1.…` belong to the first-generation template
    /// family; every other version string is a persona-agent template.
    pub fn from_template_version(version: &str) -> Origin {
        match version.strip_prefix("v1") {
            Some(rest) if rest.is_empty() || rest.starts_with(['-', '.', '_', '+']) => {
                Origin::LlmV1
            }
            _ => Origin::LlmAgents,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Origin::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown origin `{s}`")))
    }
}

/// A complex sentence with its simplified counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub id: String,
    pub source: String,
    pub simple: String,
    pub origin: Origin,
    #[serde(default)]
    pub template_version: Option<String>,
    #[serde(default)]
    pub corrected: bool,
}

impl AlignedPair {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Invalid("pair id is empty".into()));
        }
        if self.source.trim().is_empty() {
            return Err(Error::Invalid(format!(
                "pair `{}` has an empty source",
                self.id
            )));
        }
        if self.simple.trim().is_empty() {
            return Err(Error::Invalid(format!(
                "pair `{}` has an empty simplification",
                self.id
            )));
        }
        match (self.origin.is_llm(), &self.template_version) {
            (true, None) => Err(Error::Invalid(format!(
                "pair `{}` has origin {} but no template_version",
                self.id, self.origin
            ))),
            (false, Some(_)) => Err(Error::Invalid(format!(
                "pair `{}` has origin {} and must not carry a template_version",
                self.id, self.origin
            ))),
            _ => Ok(()),
        }
    }
}
