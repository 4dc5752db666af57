use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::client::{ChatMessage, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Lexical,
    Syntactic,
    Combined,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Lexical => "lexical",
            Stage::Syntactic => "syntactic",
            Stage::Combined => "combined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewShot {
    pub original: String,
    pub simplified: String,
}

/// A versioned prompt for one pipeline stage.
///
/// Stored as TOML. The version string is copied onto every pair the
/// template produces; versions starting with `v1` are counted as
/// first-generation data, everything else as persona-agent data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub version: String,
    pub stage: Stage,
    pub instruction: String,
    /// Heading of the rules block; defaults to one derived from the stage.
    #[serde(default)]
    pub rules_heading: Option<String>,
    #[serde(default)]
    pub rules: Vec<String>,
    #[serde(default)]
    pub persona: String,
    #[serde(default)]
    pub few_shot: Vec<FewShot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

const BUILTIN_LEXICAL: &str = include_str!("../../templates/lexical.tmpl");
const BUILTIN_SYNTACTIC: &str = include_str!("../../templates/syntactic.tmpl");
const BUILTIN_V1: &str = include_str!("../../templates/v1.tmpl");

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self> {
        let template: PromptTemplate =
            toml::from_str(text).map_err(|e| Error::Invalid(format!("bad template: {e}")))?;
        template.validate()?;
        Ok(template)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if let Some(name) = path.to_str().and_then(|p| p.strip_prefix("builtin:")) {
            return Self::builtin(name);
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    /// `lexical`, `syntactic`, or `v1`.
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "lexical" => BUILTIN_LEXICAL,
            "syntactic" => BUILTIN_SYNTACTIC,
            "v1" => BUILTIN_V1,
            _ => {
                return Err(Error::Invalid(format!(
                    "no builtin template named `{name}`"
                )))
            }
        };
        Self::parse(text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version.trim().is_empty() {
            return Err(Error::Invalid("template version is empty".into()));
        }
        if self.version.contains('+') {
            return Err(Error::Invalid(format!(
                "template version `{}` must not contain `+`",
                self.version
            )));
        }
        if self
            .few_shot
            .iter()
            .any(|s| s.original.trim().is_empty() || s.simplified.trim().is_empty())
        {
            return Err(Error::Invalid(format!(
                "template `{}` has an empty few-shot example",
                self.version
            )));
        }
        Ok(())
    }

    fn rules_heading(&self) -> &str {
        self.rules_heading.as_deref().unwrap_or(match self.stage {
            Stage::Lexical => "Lexical Simplification",
            Stage::Syntactic => "Syntactic Simplification",
            Stage::Combined => "Rules",
        })
    }
}

/// The messages sent for one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub messages: Vec<ChatMessage>,
    /// Total characters across all message contents.
    pub rendered_len: usize,
}

impl RenderedPrompt {
    pub fn text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Renders instruction, rules, persona and examples into a system message
/// and the sentence into a user message shaped like the examples.
pub fn render_prompt(template: &PromptTemplate, sentence: &str) -> RenderedPrompt {
    let mut sections = vec![format!("Instruction:\n{}", template.instruction.trim())];
    if !template.rules.is_empty() {
        let rules: Vec<String> = template
            .rules
            .iter()
            .map(|r| format!("- {}", r.trim()))
            .collect();
        sections.push(format!(
            "{}:\n{}",
            template.rules_heading(),
            rules.join("\n")
        ));
    }
    if !template.persona.trim().is_empty() {
        sections.push(format!("Persona:\n{}", template.persona.trim()));
    }
    if !template.few_shot.is_empty() {
        let examples: Vec<String> = template
            .few_shot
            .iter()
            .map(|s| {
                format!(
                    "Original: {}\nSimplified: {}",
                    s.original.trim(),
                    s.simplified.trim()
                )
            })
            .collect();
        sections.push(format!("Examples:\n{}", examples.join("\n\n")));
    }
    let messages = vec![
        ChatMessage {
            role: Role::System,
            content: sections.join("\n\n"),
        },
        ChatMessage {
            role: Role::User,
            content: format!("Original: {}\nSimplified:", sentence.trim()),
        },
    ];
    let rendered_len = messages.iter().map(|m| m.content.chars().count()).sum();
    RenderedPrompt {
        messages,
        rendered_len,
    }
}
