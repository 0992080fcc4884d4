//! Model gateway: prompt templates, provider backends, structured-output
//! validation with one repair round, retries and a concurrency cap.

pub mod backend;
pub mod formats;
pub mod mock;
pub mod relaxed;
pub mod shape;
mod synthetic;
pub mod template;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use backend::{Backend, BackendError, HttpBackend};
pub use mock::{sha256_hex, Fallback, MockBackend, MockReply, RuleSpec};
pub use shape::Shape;
pub use template::{PromptTemplate, TemplateError, TemplateId};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider unreachable after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("response failed validation after repair: {}", problems.join("; "))]
    Schema {
        problems: Vec<String>,
        value: Option<Value>,
        raw: String,
    },
    #[error("provider configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub embedding_model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_in_flight: usize,
    /// Retries after the first attempt for transport, 429 and 5xx failures.
    pub retry_budget: u32,
    pub backoff_ms: u64,
    pub timeout_s: u64,
    /// Scripted rules for the mock backend.
    pub mock_responses: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Mock,
            endpoint: String::new(),
            model: "mock".into(),
            embedding_model: "mock-embed".into(),
            api_key_env: None,
            temperature: 0.0,
            max_in_flight: 4,
            retry_budget: 3,
            backoff_ms: 500,
            timeout_s: 120,
            mock_responses: None,
        }
    }
}

impl ProviderConfig {
    pub fn check(&self) -> Result<(), GatewayError> {
        if self.temperature != 0.0 {
            return Err(GatewayError::Config(format!(
                "temperature must be 0 for reproducible runs, got {}",
                self.temperature
            )));
        }
        if self.retry_budget < 1 {
            return Err(GatewayError::Config("retry_budget must be at least 1".into()));
        }
        if self.max_in_flight < 1 {
            return Err(GatewayError::Config("max_in_flight must be at least 1".into()));
        }
        if self.backend == BackendKind::Http && self.endpoint.trim().is_empty() {
            return Err(GatewayError::Config("http backend needs an endpoint".into()));
        }
        Ok(())
    }
}

/// Counting semaphore bounding requests in flight.
struct Limiter {
    max: usize,
    state: Mutex<(usize, usize)>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            state: Mutex::new((0, 0)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut st = self.state.lock().expect("limiter");
        while st.0 >= self.max {
            st = self.cv.wait(st).expect("limiter");
        }
        st.0 += 1;
        st.1 = st.1.max(st.0);
        Permit(self)
    }

    fn peak(&self) -> usize {
        self.state.lock().expect("limiter").1
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut st = self.0.state.lock().expect("limiter");
        st.0 -= 1;
        self.0.cv.notify_one();
    }
}

pub struct Gateway {
    backend: Arc<dyn Backend>,
    model: String,
    embedding_model: String,
    retry_budget: u32,
    backoff: Duration,
    limiter: Limiter,
    requests: AtomicU64,
    repairs: AtomicU64,
}

impl Gateway {
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, GatewayError> {
        cfg.check()?;
        let backend: Arc<dyn Backend> = match cfg.backend {
            BackendKind::Mock => match &cfg.mock_responses {
                Some(p) => Arc::new(MockBackend::from_file(p).map_err(GatewayError::Config)?),
                None => Arc::new(MockBackend::new()),
            },
            BackendKind::Http => {
                let key = match &cfg.api_key_env {
                    Some(var) => Some(
                        std::env::var(var)
                            .map_err(|_| GatewayError::Config(format!("environment variable {var} is not set")))?,
                    ),
                    None => None,
                };
                Arc::new(HttpBackend::new(
                    cfg.endpoint.clone(),
                    cfg.model.clone(),
                    cfg.embedding_model.clone(),
                    key,
                    cfg.temperature,
                    Duration::from_secs(cfg.timeout_s.max(1)),
                ))
            }
        };
        Ok(Self::with_backend(backend, cfg))
    }

    pub fn with_backend(backend: Arc<dyn Backend>, cfg: &ProviderConfig) -> Self {
        Self {
            backend,
            model: cfg.model.clone(),
            embedding_model: cfg.embedding_model.clone(),
            retry_budget: cfg.retry_budget,
            backoff: Duration::from_millis(cfg.backoff_ms),
            limiter: Limiter::new(cfg.max_in_flight),
            requests: AtomicU64::new(0),
            repairs: AtomicU64::new(0),
        }
    }

    /// Mock gateway with default settings and no backoff delay.
    pub fn mock(backend: MockBackend) -> Self {
        let cfg = ProviderConfig {
            backoff_ms: 0,
            ..ProviderConfig::default()
        };
        Self::with_backend(Arc::new(backend), &cfg)
    }

    pub fn model_name(&self) -> &str {
        &self.model
    }

    pub fn embedding_model_name(&self) -> &str {
        &self.embedding_model
    }

    /// Backend calls made, including retries and repairs.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn repair_count(&self) -> u64 {
        self.repairs.load(Ordering::SeqCst)
    }

    /// Highest number of concurrent backend calls observed.
    pub fn peak_in_flight(&self) -> usize {
        self.limiter.peak()
    }

    fn with_retries<T>(&self, mut op: impl FnMut() -> Result<T, BackendError>) -> Result<T, GatewayError> {
        let mut attempt = 0u32;
        loop {
            let result = {
                let _permit = self.limiter.acquire();
                self.requests.fetch_add(1, Ordering::SeqCst);
                op()
            };
            match result {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.retry_budget => {
                    log::warn!("provider call failed ({e}); retry {}", attempt + 1);
                    std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt));
                    attempt += 1;
                }
                Err(e) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
    }

    /// Raw completion text.
    pub fn complete_text(&self, prompt: &str) -> Result<String, GatewayError> {
        self.with_retries(|| self.backend.complete(prompt))
    }

    /// Structured completion conforming to `shape`.
    pub fn complete(&self, prompt: &str, shape: &Shape) -> Result<Value, GatewayError> {
        self.complete_checked(prompt, shape, &|_| Vec::new())
    }

    /// Like `complete`, with an extra semantic check whose problems also
    /// trigger the repair round.
    pub fn complete_checked(
        &self,
        prompt: &str,
        shape: &Shape,
        extra: &dyn Fn(&Value) -> Vec<String>,
    ) -> Result<Value, GatewayError> {
        let raw = self.complete_text(prompt)?;
        let (value, problems) = match interpret(&raw, shape, extra) {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };
        log::info!("response failed validation, requesting repair: {}", problems.join("; "));
        self.repairs.fetch_add(1, Ordering::SeqCst);
        let repair = template::render(
            TemplateId::Repair,
            &template::vars([
                ("prompt", prompt.to_string()),
                ("response", raw),
                (
                    "problems",
                    problems.iter().map(|p| format!("- {p}")).collect::<Vec<_>>().join("\n"),
                ),
            ]),
        )?;
        let raw2 = self.complete_text(&repair)?;
        match interpret(&raw2, shape, extra) {
            Ok(v) => Ok(v),
            Err((value2, problems2)) => Err(GatewayError::Schema {
                problems: problems2,
                value: value2.or(value),
                raw: raw2,
            }),
        }
    }

    /// Unit-length embedding vectors, one per text.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let vecs = self.with_retries(|| self.backend.embed(texts))?;
        if vecs.len() != texts.len() {
            return Err(GatewayError::Transport {
                attempts: 1,
                message: format!("expected {} embeddings, got {}", texts.len(), vecs.len()),
            });
        }
        Ok(vecs.into_iter().map(normalize).collect())
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

fn interpret(
    raw: &str,
    shape: &Shape,
    extra: &dyn Fn(&Value) -> Vec<String>,
) -> Result<Value, (Option<Value>, Vec<String>)> {
    let value = relaxed::extract_first_value(raw).or_else(|| {
        shape
            .accepts_plain_list()
            .then(|| relaxed::extract_plain_list(raw))
            .flatten()
            .map(|items| Value::Array(items.into_iter().map(Value::String).collect()))
    });
    let Some(value) = value else {
        return Err((None, vec!["no structured value found in the response".into()]));
    };
    let mut problems = shape.check(&value);
    if problems.is_empty() {
        problems = extra(&value);
    }
    if problems.is_empty() {
        Ok(value)
    } else {
        Err((Some(value), problems))
    }
}
