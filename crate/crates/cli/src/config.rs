//! `simpkit.toml`: flat keys, all optional. Flags override the file, the
//! file overrides built-in defaults. Credentials never live here; only the
//! name of the variable holding the token does.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use simpkit_core::evalharness::BackendOptions;
use simpkit_core::promptgen::{EndpointConfig, ModelParams, RetryPolicy};
use simpkit_core::Language;

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = "simpkit.toml";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolConfig {
    pub data_dir: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub language: Option<String>,
    pub workers: Option<usize>,
    pub rps: Option<f64>,
    pub seed: Option<u64>,
    pub min_words: Option<usize>,
    pub endpoint_url: Option<String>,
    pub model: Option<String>,
    /// Name of the variable holding the token; empty sends no credential.
    pub token_env: Option<String>,
    pub auth_header: Option<String>,
    pub timeout_secs: Option<u64>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub max_attempts: Option<u32>,
    pub backoff_ms: Option<u64>,
}

impl ToolConfig {
    /// Reads `explicit`, or the default file if it exists, or nothing.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_CONFIG).is_file() => PathBuf::from(DEFAULT_CONFIG),
            None => return Ok(ToolConfig::default()),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: ToolConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.check()?;
        log::debug!("loaded configuration from {}", path.display());
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(lang) = &self.language {
            lang.parse::<Language>()?;
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if let Some(r) = self.rps {
            check_rps(r)?;
        }
        if self.max_attempts == Some(0) {
            return Err(CliError::Config("max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn language(&self, flag: Option<&str>) -> Result<Language, CliError> {
        match flag.or(self.language.as_deref()) {
            Some(l) => Ok(l.parse()?),
            None => Ok(Language::default()),
        }
    }

    pub fn workers(&self, flag: Option<usize>) -> Result<usize, CliError> {
        match flag.or(self.workers).unwrap_or(4) {
            0 => Err(CliError::Config("workers must be at least 1".into())),
            n => Ok(n),
        }
    }

    pub fn rps(&self, flag: Option<f64>) -> Result<Option<f64>, CliError> {
        let rps = flag.or(self.rps);
        if let Some(r) = rps {
            check_rps(r)?;
        }
        Ok(rps)
    }

    /// `<data_dir>/<file>` when no path is given.
    pub fn data_path(&self, flag: Option<&Path>, file: &str) -> Result<PathBuf, CliError> {
        match (flag, &self.data_dir) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(dir)) => Ok(dir.join(file)),
            (None, None) => Err(CliError::Config(
                "no --data path given and no data_dir configured".into(),
            )),
        }
    }

    /// Relative template paths that do not exist are looked up in `templates_dir`.
    pub fn template_path(&self, path: &Path) -> PathBuf {
        if path.is_relative() && !path.exists() {
            if let Some(dir) = &self.templates_dir {
                let candidate = dir.join(path);
                if candidate.exists() {
                    return candidate;
                }
            }
        }
        path.to_path_buf()
    }

    pub fn endpoint(&self) -> EndpointConfig {
        let defaults = EndpointConfig::default();
        EndpointConfig {
            url: self.endpoint_url.clone().unwrap_or(defaults.url),
            model: self.model.clone().unwrap_or(defaults.model),
            token_env: match &self.token_env {
                Some(v) if v.trim().is_empty() => None,
                Some(v) => Some(v.clone()),
                None => defaults.token_env,
            },
            auth_header: self.auth_header.clone().unwrap_or(defaults.auth_header),
            timeout_secs: self.timeout_secs.unwrap_or(defaults.timeout_secs),
        }
    }

    pub fn params(&self) -> ModelParams {
        let defaults = ModelParams::default();
        ModelParams {
            model: self.model.clone().unwrap_or(defaults.model),
            temperature: self.temperature.unwrap_or(defaults.temperature),
            max_tokens: self.max_tokens.unwrap_or(defaults.max_tokens),
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        let defaults = RetryPolicy::default();
        RetryPolicy {
            max_attempts: self.max_attempts.unwrap_or(defaults.max_attempts),
            backoff_base: self
                .backoff_ms
                .map(Duration::from_millis)
                .unwrap_or(defaults.backoff_base),
        }
    }

    pub fn backend_options(&self) -> Result<BackendOptions, CliError> {
        Ok(BackendOptions {
            workers: self.workers(None)?,
            rps: self.rps(None)?,
            endpoint: self.endpoint(),
            params: self.params(),
            retry: self.retry(),
        })
    }
}

fn check_rps(r: f64) -> Result<(), CliError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("rps must be positive, got {r}")))
    }
}
