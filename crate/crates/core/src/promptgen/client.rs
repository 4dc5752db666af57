//! Chat-style completion endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompletionError {
    /// Worth retrying: timeouts, rate limiting, server errors.
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
}

pub trait CompletionClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest)
        -> std::result::Result<String, CompletionError>;
}

impl<C: CompletionClient + ?Sized> CompletionClient for &C {
    fn complete(
        &self,
        request: &CompletionRequest,
    ) -> std::result::Result<String, CompletionError> {
        (**self).complete(request)
    }
}

/// Endpoint settings. The credential itself only ever comes from the
/// environment variable named by `token_env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// `None` sends no credential.
    pub token_env: Option<String>,
    pub auth_header: String,
    pub timeout_secs: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            token_env: Some("SIMPKIT_API_TOKEN".into()),
            auth_header: "Authorization".into(),
            timeout_secs: 60,
        }
    }
}

/// Client for OpenAI-compatible `chat/completions` endpoints.
pub struct HttpCompletionClient {
    agent: ureq::Agent,
    url: String,
    auth: Option<(String, String)>,
}

impl HttpCompletionClient {
    /// Fails with [`Error::MissingCredential`] when the token variable is
    /// configured but unset, before any request is made.
    pub fn from_config(config: &EndpointConfig) -> Result<Self> {
        let auth = match &config.token_env {
            Some(var) => {
                let token = std::env::var(var)
                    .ok()
                    .filter(|t| !t.trim().is_empty())
                    .ok_or_else(|| Error::MissingCredential(var.clone()))?;
                let value = if config.auth_header.eq_ignore_ascii_case("authorization") {
                    format!("Bearer {token}")
                } else {
                    token
                };
                Some((config.auth_header.clone(), value))
            }
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpCompletionClient {
            agent,
            url: config.url.clone(),
            auth,
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    message: Option<ChoiceMessage>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl CompletionClient for HttpCompletionClient {
    fn complete(
        &self,
        request: &CompletionRequest,
    ) -> std::result::Result<String, CompletionError> {
        let mut call = self.agent.post(&self.url);
        if let Some((name, value)) = &self.auth {
            call = call.header(name, value);
        }
        let mut response = call
            .send_json(request)
            .map_err(|e| CompletionError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(CompletionError::Transient(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(CompletionError::Fatal(format!(
                "HTTP {status}: {}",
                body.trim()
            )));
        }
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| CompletionError::Fatal(format!("unexpected response body: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| CompletionError::Fatal("response has no choices".into()))?;
        Ok(choice
            .message
            .and_then(|m| m.content)
            .or(choice.text)
            .unwrap_or_default())
    }
}
