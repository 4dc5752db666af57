use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::TestItem;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::promptgen::{
    call_with_retry, ChatMessage, CompletionClient, CompletionRequest, EndpointConfig,
    HttpCompletionClient, ModelParams, PipelineOptions, RateLimiter, RetryPolicy, Role,
};

/// Where system outputs come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    /// Output equals input.
    Identity,
    /// Precomputed `{id, output}` lines.
    FileMap(PathBuf),
    /// A chat-completions endpoint; the sentence is sent as the user message.
    Http(String),
    /// A process reading one sentence per stdin line and writing one output
    /// per stdout line.
    Command(Vec<String>),
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Identity => f.write_str("identity"),
            BackendSpec::FileMap(p) => write!(f, "file:{}", p.display()),
            BackendSpec::Http(url) => write!(f, "http:{url}"),
            BackendSpec::Command(argv) => write!(
                f,
                "cmd:{}",
                shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_else(|_| argv.join(" "))
            ),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(BackendSpec::Identity);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(|| {
            Error::Invalid(format!(
                "backend `{s}`: expected identity, file:, http: or cmd:"
            ))
        })?;
        if rest.trim().is_empty() {
            return Err(Error::Invalid(format!(
                "backend `{s}` has no configuration"
            )));
        }
        match kind {
            "file" => Ok(BackendSpec::FileMap(PathBuf::from(rest))),
            // the url keeps its own scheme: `http:http://host/...`
            "http" => Ok(BackendSpec::Http(rest.to_string())),
            "cmd" => {
                let argv = shlex::split(rest)
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| Error::Invalid(format!("cannot parse command line `{rest}`")))?;
                Ok(BackendSpec::Command(argv))
            }
            other => Err(Error::Invalid(format!("unknown backend kind `{other}`"))),
        }
    }
}

/// Settings used by the http backend and by parallel dispatch.
#[derive(Debug, Clone)]
pub struct BackendOptions {
    pub workers: usize,
    pub rps: Option<f64>,
    /// Endpoint settings; the url is taken from the backend spec.
    pub endpoint: EndpointConfig,
    pub params: ModelParams,
    pub retry: RetryPolicy,
}

impl Default for BackendOptions {
    fn default() -> Self {
        BackendOptions {
            workers: 4,
            rps: None,
            endpoint: EndpointConfig::default(),
            params: ModelParams::default(),
            retry: RetryPolicy::default(),
        }
    }
}

/// Per-item outcome: the output, or why there is none.
pub type Outcome = std::result::Result<String, String>;

pub trait Simplifier: Send + Sync {
    /// Checks that every item can be served before any work is done.
    fn precheck(&self, _items: &[TestItem]) -> Result<()> {
        Ok(())
    }

    /// One outcome per item, in item order.
    fn simplify(&self, items: &[TestItem]) -> Vec<Outcome>;
}

pub struct IdentityBackend;

impl Simplifier for IdentityBackend {
    fn simplify(&self, items: &[TestItem]) -> Vec<Outcome> {
        items.iter().map(|i| Ok(i.input.clone())).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub id: String,
    pub output: String,
}

pub struct FileMapBackend {
    outputs: HashMap<String, String>,
}

impl FileMapBackend {
    pub fn load(path: &Path) -> Result<Self> {
        let records: Vec<OutputRecord> = jsonl::read_records(path)?;
        let mut outputs = HashMap::with_capacity(records.len());
        for r in records {
            if outputs.insert(r.id.clone(), r.output).is_some() {
                return Err(Error::DuplicateId(r.id));
            }
        }
        Ok(FileMapBackend { outputs })
    }

    pub fn from_map(outputs: HashMap<String, String>) -> Self {
        FileMapBackend { outputs }
    }
}

impl Simplifier for FileMapBackend {
    fn precheck(&self, items: &[TestItem]) -> Result<()> {
        let missing: Vec<String> = items
            .iter()
            .filter(|i| !self.outputs.contains_key(&i.id))
            .map(|i| i.id.clone())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingOutputs(missing))
        }
    }

    fn simplify(&self, items: &[TestItem]) -> Vec<Outcome> {
        items
            .iter()
            .map(|i| {
                self.outputs
                    .get(&i.id)
                    .cloned()
                    .ok_or_else(|| "no output in file".to_string())
            })
            .collect()
    }
}

/// Sends each sentence as a single user message.
pub struct CompletionBackend<C> {
    client: C,
    options: BackendOptions,
}

impl<C: CompletionClient> CompletionBackend<C> {
    pub fn new(client: C, options: BackendOptions) -> Self {
        CompletionBackend { client, options }
    }
}

impl<C: CompletionClient> Simplifier for CompletionBackend<C> {
    fn simplify(&self, items: &[TestItem]) -> Vec<Outcome> {
        let limiter = self.options.rps.map(RateLimiter::per_second);
        let pipeline = PipelineOptions {
            params: self.options.params.clone(),
            retry: self.options.retry,
            limiter: limiter.as_ref(),
        };
        parallel_map(items, self.options.workers, |item| {
            let request = CompletionRequest {
                model: pipeline.params.model.clone(),
                messages: vec![ChatMessage {
                    role: Role::User,
                    content: item.input.clone(),
                }],
                temperature: pipeline.params.temperature,
                max_tokens: pipeline.params.max_tokens,
            };
            call_with_retry(&self.client, &request, &pipeline, 1)
                .map(|text| text.trim().to_string())
                .map_err(|e| e.to_string())
        })
    }
}

/// Runs `f` over `items` on up to `workers` threads, keeping item order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock() = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("every slot filled"))
        .collect()
}

pub struct CommandBackend {
    argv: Vec<String>,
}

impl CommandBackend {
    pub fn new(argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::Invalid("empty command line".into()));
        }
        Ok(CommandBackend { argv })
    }

    fn run(&self, items: &[TestItem]) -> std::result::Result<Vec<String>, String> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| format!("cannot start `{}`: {e}", self.argv[0]))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let lines = std::thread::scope(|scope| {
            // feed stdin concurrently so a process that streams its output
            // cannot deadlock on a full pipe
            let writer = scope.spawn(move || -> std::io::Result<()> {
                for item in items {
                    let line = item.input.replace(['\n', '\r'], " ");
                    writeln!(stdin, "{line}")?;
                }
                Ok(())
            });
            let lines: std::io::Result<Vec<String>> = BufReader::new(stdout).lines().collect();
            let written = writer.join().expect("writer thread");
            written.and(lines)
        });
        let status = child.wait().map_err(|e| e.to_string())?;
        let lines = lines.map_err(|e| format!("pipe error: {e}"))?;
        if !status.success() {
            return Err(format!("process exited with {status}"));
        }
        if lines.len() != items.len() {
            return Err(format!(
                "expected {} output lines, got {}",
                items.len(),
                lines.len()
            ));
        }
        Ok(lines)
    }
}

impl Simplifier for CommandBackend {
    fn simplify(&self, items: &[TestItem]) -> Vec<Outcome> {
        match self.run(items) {
            Ok(lines) => lines.into_iter().map(Ok).collect(),
            Err(e) => {
                log::error!("{e}");
                items.iter().map(|_| Err(e.clone())).collect()
            }
        }
    }
}

/// Builds the backend named by `spec`.
pub fn resolve(spec: &BackendSpec, options: &BackendOptions) -> Result<Box<dyn Simplifier>> {
    Ok(match spec {
        BackendSpec::Identity => Box::new(IdentityBackend),
        BackendSpec::FileMap(path) => Box::new(FileMapBackend::load(path)?),
        BackendSpec::Http(url) => {
            let endpoint = EndpointConfig {
                url: url.clone(),
                ..options.endpoint.clone()
            };
            Box::new(CompletionBackend::new(
                HttpCompletionClient::from_config(&endpoint)?,
                options.clone(),
            ))
        }
        BackendSpec::Command(argv) => Box::new(CommandBackend::new(argv.clone())?),
    })
}
