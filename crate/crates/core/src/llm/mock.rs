//! Scripted provider for tests and offline runs.
//!
//! Rules are tried in order; the first whose matcher accepts the prompt
//! answers it. Each rule replays its reply sequence, repeating the last reply
//! once exhausted. Unmatched prompts go to the fallback.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::backend::{Backend, BackendError};
use super::synthetic;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Status { status: u16 },
    Transport { transport_error: String },
}

impl MockReply {
    fn resolve(&self) -> Result<String, BackendError> {
        match self {
            MockReply::Text(t) => Ok(t.clone()),
            MockReply::Status { status } => Err(BackendError::Status {
                status: *status,
                body: "scripted status".into(),
            }),
            MockReply::Transport { transport_error } => Err(BackendError::Transport(transport_error.clone())),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct RuleSpec {
    /// Every substring must occur in the prompt.
    pub contains: Vec<String>,
    pub prompt_sha256: Option<String>,
    pub responses: Vec<MockReply>,
}

#[derive(Debug)]
struct Rule {
    spec: RuleSpec,
    hits: AtomicUsize,
}

impl Rule {
    fn matches(&self, prompt: &str, digest: &str) -> bool {
        self.spec.contains.iter().all(|s| prompt.contains(s.as_str()))
            && self
                .spec
                .prompt_sha256
                .as_deref()
                .is_none_or(|h| h.eq_ignore_ascii_case(digest))
    }
}

type Responder = dyn Fn(&str) -> Result<String, BackendError> + Send + Sync;

#[derive(Clone)]
pub enum Fallback {
    /// Deterministic format-correct output for the shipped prompts.
    Synthetic,
    Fail,
    Func(Arc<Responder>),
}

pub struct MockBackend {
    rules: Vec<Rule>,
    fallback: Fallback,
    embed_dim: usize,
    log: Mutex<Vec<String>>,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new()
    }
}

pub fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

impl MockBackend {
    pub fn new() -> Self {
        Self {
            rules: Vec::new(),
            fallback: Fallback::Synthetic,
            embed_dim: 256,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn with_func<F>(self, f: F) -> Self
    where
        F: Fn(&str) -> Result<String, BackendError> + Send + Sync + 'static,
    {
        self.with_fallback(Fallback::Func(Arc::new(f)))
    }

    pub fn with_rule(mut self, spec: RuleSpec) -> Self {
        self.rules.push(Rule {
            spec,
            hits: AtomicUsize::new(0),
        });
        self
    }

    /// Reply with `responses` in turn to prompts containing `needle`.
    pub fn on_contains<S: Into<String>>(self, needle: &str, responses: impl IntoIterator<Item = S>) -> Self {
        self.with_rule(RuleSpec {
            contains: vec![needle.to_string()],
            prompt_sha256: None,
            responses: responses.into_iter().map(|s| MockReply::Text(s.into())).collect(),
        })
    }

    pub fn on_contains_replies(self, needle: &str, responses: Vec<MockReply>) -> Self {
        self.with_rule(RuleSpec {
            contains: vec![needle.to_string()],
            prompt_sha256: None,
            responses,
        })
    }

    /// Loads rules from a JSON array of rule objects.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let specs: Vec<RuleSpec> = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(specs.into_iter().fold(Self::new(), |m, s| m.with_rule(s)))
    }

    /// Every prompt received so far, in arrival order.
    pub fn prompts(&self) -> Vec<String> {
        self.log.lock().expect("mock log").clone()
    }
}

impl Backend for MockBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        self.log.lock().expect("mock log").push(prompt.to_string());
        let digest = sha256_hex(prompt);
        for rule in &self.rules {
            if rule.matches(prompt, &digest) {
                let n = rule.hits.fetch_add(1, Ordering::SeqCst);
                let replies = &rule.spec.responses;
                return match replies.get(n.min(replies.len().saturating_sub(1))) {
                    Some(r) => r.resolve(),
                    None => Ok(String::new()),
                };
            }
        }
        match &self.fallback {
            Fallback::Synthetic => synthetic::respond(prompt)
                .ok_or_else(|| BackendError::Decode("mock: no rule or synthetic responder for prompt".into())),
            Fallback::Fail => Err(BackendError::Decode("mock: no rule matches prompt".into())),
            Fallback::Func(f) => f(prompt),
        }
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| synthetic::embed(t, self.embed_dim)).collect())
    }
}
