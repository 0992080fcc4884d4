//! Submission and leaderboard HTTP service over an append-only journal.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::mpsc;

use crate::evaluation::{csv_escape, evaluate_submission, EvaluationReport, QuestionStore};
use crate::ingest::{self, Split};
use crate::llm::{sha256_hex, Gateway};
use crate::model::{QuestionKind, Submission, Validate};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("journal {path}: {message}")]
    Journal { path: PathBuf, message: String },
    #[error("token file {path}: {message}")]
    Tokens { path: PathBuf, message: String },
    #[error("no datasets configured")]
    NoDatasets,
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(at: DateTime<Utc>) -> Self {
        Self(Mutex::new(at))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().expect("clock") += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock")
    }
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Submitted {
        id: String,
        dataset: String,
        token: String,
        at: String,
        submission: Submission,
    },
    Started {
        id: String,
        at: String,
    },
    Done {
        id: String,
        at: String,
        report: EvaluationReport,
    },
    Failed {
        id: String,
        at: String,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub status: Status,
    pub at: String,
}

#[derive(Debug, Clone)]
struct Record {
    id: String,
    dataset: String,
    token: String,
    submitted_at: String,
    submitted: DateTime<Utc>,
    submission: Submission,
    status: Status,
    history: Vec<Transition>,
    report: Option<EvaluationReport>,
    error: Option<String>,
}

/// Append-only event log plus the state folded from it.
struct Journal {
    path: PathBuf,
    file: File,
    records: BTreeMap<String, Record>,
}

impl Journal {
    fn open(path: &Path) -> Result<Self, ServiceError> {
        let err = |message: String| ServiceError::Journal {
            path: path.to_path_buf(),
            message,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
        }
        let mut records = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| err(e.to_string()))?);
            let lines: Vec<String> = reader
                .lines()
                .collect::<Result<_, _>>()
                .map_err(|e| err(e.to_string()))?;
            let last = lines.len().saturating_sub(1);
            for (n, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Event>(line) {
                    Ok(ev) => Self::apply(&mut records, ev).map_err(|m| err(format!("line {}: {m}", n + 1)))?,
                    // a torn final write from a crash
                    Err(e) if n == last => log::warn!("ignoring unreadable last journal line: {e}"),
                    Err(e) => return Err(err(format!("line {}: {e}", n + 1))),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| err(e.to_string()))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            records,
        })
    }

    fn apply(records: &mut BTreeMap<String, Record>, ev: Event) -> Result<(), String> {
        let parse = |at: &str| {
            DateTime::parse_from_rfc3339(at)
                .map(|t| t.with_timezone(&Utc))
                .map_err(|e| format!("bad timestamp {at:?}: {e}"))
        };
        match ev {
            Event::Submitted {
                id,
                dataset,
                token,
                at,
                submission,
            } => {
                let submitted = parse(&at)?;
                records.insert(
                    id.clone(),
                    Record {
                        id,
                        dataset,
                        token,
                        history: vec![Transition {
                            status: Status::Queued,
                            at: at.clone(),
                        }],
                        submitted_at: at,
                        submitted,
                        submission,
                        status: Status::Queued,
                        report: None,
                        error: None,
                    },
                );
            }
            Event::Started { id, at } => {
                let r = records.get_mut(&id).ok_or_else(|| format!("unknown submission {id}"))?;
                r.status = Status::Running;
                r.history.push(Transition {
                    status: Status::Running,
                    at,
                });
            }
            Event::Done { id, at, report } => {
                let r = records.get_mut(&id).ok_or_else(|| format!("unknown submission {id}"))?;
                r.status = Status::Done;
                r.report = Some(report);
                r.history.push(Transition {
                    status: Status::Done,
                    at,
                });
            }
            Event::Failed { id, at, error } => {
                let r = records.get_mut(&id).ok_or_else(|| format!("unknown submission {id}"))?;
                r.status = Status::Failed;
                r.error = Some(error);
                r.history.push(Transition {
                    status: Status::Failed,
                    at,
                });
            }
        }
        Ok(())
    }

    fn append(&mut self, ev: Event) -> Result<(), String> {
        let mut line = serde_json::to_string(&ev).map_err(|e| e.to_string())?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| format!("{}: {e}", self.path.display()))?;
        Self::apply(&mut self.records, ev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub submission_id: String,
    pub method_name: String,
    pub submitted_at: String,
    pub status: Status,
    pub va_cc: Option<f64>,
    pub va_ratio: Option<f64>,
    pub nu_cc: Option<f64>,
    pub nu_ratio: Option<f64>,
}

fn order_key(e: &LeaderboardEntry, f: &LeaderboardEntry) -> std::cmp::Ordering {
    let desc = |a: Option<f64>, b: Option<f64>| {
        b.unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.unwrap_or(f64::NEG_INFINITY))
    };
    desc(e.nu_cc, f.nu_cc)
        .then_with(|| desc(e.va_cc, f.va_cc))
        .then_with(|| e.submitted_at.cmp(&f.submitted_at))
        .then_with(|| e.submission_id.cmp(&f.submission_id))
}

fn leaderboard(records: &BTreeMap<String, Record>, dataset: &str) -> Vec<LeaderboardEntry> {
    let mut out: Vec<LeaderboardEntry> = records
        .values()
        .filter(|r| r.dataset == dataset && r.status == Status::Done)
        .filter_map(|r| {
            let report = r.report.as_ref()?;
            let kind = |k: QuestionKind| report.kinds.get(&k);
            Some(LeaderboardEntry {
                rank: 0,
                submission_id: r.id.clone(),
                method_name: r.submission.method_name.clone(),
                submitted_at: r.submitted_at.clone(),
                status: r.status,
                va_cc: kind(QuestionKind::Va).map(|k| k.cc),
                va_ratio: kind(QuestionKind::Va).and_then(|k| k.ratio),
                nu_cc: kind(QuestionKind::Nu).map(|k| k.cc),
                nu_ratio: kind(QuestionKind::Nu).and_then(|k| k.ratio),
            })
        })
        .collect();
    out.sort_by(order_key);
    for (i, e) in out.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    out
}

pub fn leaderboard_csv(entries: &[LeaderboardEntry]) -> String {
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.1}")).unwrap_or_default();
    let mut s = String::from("rank,submission_id,method,submitted_at,VA_CC,VA_Ratio,NU_CC,NU_Ratio\n");
    for e in entries {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.rank,
            e.submission_id,
            csv_escape(&e.method_name),
            e.submitted_at,
            cell(e.va_cc),
            cell(e.va_ratio),
            cell(e.nu_cc),
            cell(e.nu_ratio)
        ));
    }
    s
}

/// Reads bearer tokens, one per line; blank lines and `#` comments skipped.
pub fn load_tokens(path: &Path) -> Result<Vec<String>, ServiceError> {
    let text = ingest::read_file(path).map_err(|e| ServiceError::Tokens {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

pub struct ServiceOptions {
    pub journal_path: PathBuf,
    pub tokens: Vec<String>,
    /// Submissions admitted per token per window.
    pub rate_limit: usize,
    pub window: Duration,
    pub stores: BTreeMap<String, QuestionStore>,
    /// Split submissions are scored on.
    pub split: Split,
}

struct Inner {
    journal: Mutex<Journal>,
    token_hashes: HashSet<String>,
    rate_limit: usize,
    window: Duration,
    stores: BTreeMap<String, Arc<QuestionStore>>,
    split: Split,
    gateway: Arc<Gateway>,
    clock: Arc<dyn Clock>,
    queues: Mutex<BTreeMap<String, mpsc::UnboundedSender<String>>>,
}

#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

impl Service {
    pub fn open(opts: ServiceOptions, gateway: Arc<Gateway>, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        if opts.stores.is_empty() {
            return Err(ServiceError::NoDatasets);
        }
        let journal = Journal::open(&opts.journal_path)?;
        Ok(Self {
            inner: Arc::new(Inner {
                journal: Mutex::new(journal),
                token_hashes: opts.tokens.iter().map(|t| sha256_hex(t)).collect(),
                rate_limit: opts.rate_limit,
                window: opts.window,
                stores: opts.stores.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
                split: opts.split,
                gateway,
                clock,
                queues: Mutex::new(BTreeMap::new()),
            }),
        })
    }

    /// Starts one worker per dataset, requeues unfinished submissions and
    /// returns the router. Must run inside a tokio runtime.
    pub fn start(&self) -> Router {
        let pending: Vec<(String, String)> = {
            let j = self.inner.journal.lock().expect("journal");
            let mut p: Vec<&Record> = j
                .records
                .values()
                .filter(|r| matches!(r.status, Status::Queued | Status::Running))
                .collect();
            p.sort_by(|a, b| a.submitted_at.cmp(&b.submitted_at).then(a.id.cmp(&b.id)));
            p.iter().map(|r| (r.dataset.clone(), r.id.clone())).collect()
        };
        {
            let mut queues = self.inner.queues.lock().expect("queues");
            for dataset in self.inner.stores.keys() {
                let (tx, rx) = mpsc::unbounded_channel();
                tokio::spawn(worker(self.inner.clone(), dataset.clone(), rx));
                queues.insert(dataset.clone(), tx);
            }
            for (dataset, id) in pending {
                if let Some(tx) = queues.get(&dataset) {
                    let _ = tx.send(id);
                }
            }
        }
        Router::new()
            .route("/v1/submissions", post(submit))
            .route("/v1/submissions/{id}", get(status))
            .route("/v1/leaderboard", get(board))
            .with_state(self.inner.clone())
    }

    pub async fn serve(&self, listener: tokio::net::TcpListener) -> std::io::Result<()> {
        axum::serve(listener, self.start()).await
    }

    pub fn leaderboard(&self, dataset: &str) -> Vec<LeaderboardEntry> {
        leaderboard(&self.inner.journal.lock().expect("journal").records, dataset)
    }
}

async fn worker(inner: Arc<Inner>, dataset: String, mut rx: mpsc::UnboundedReceiver<String>) {
    let store = inner.stores[&dataset].clone();
    while let Some(id) = rx.recv().await {
        let submission = {
            let mut j = inner.journal.lock().expect("journal");
            let Some(sub) = j.records.get(&id).map(|r| r.submission.clone()) else {
                continue;
            };
            if let Err(e) = j.append(Event::Started {
                id: id.clone(),
                at: stamp(inner.clock.now()),
            }) {
                log::error!("{e}");
            }
            sub
        };
        let (gw, st, split) = (inner.gateway.clone(), store.clone(), inner.split);
        let outcome = tokio::task::spawn_blocking(move || evaluate_submission(&submission, &st, split, &gw)).await;
        let at = stamp(inner.clock.now());
        let ev = match outcome {
            Ok(Ok(report)) => Event::Done { id, at, report },
            Ok(Err(e)) => Event::Failed {
                id,
                at,
                error: e.to_string(),
            },
            Err(e) => Event::Failed {
                id,
                at,
                error: format!("evaluation panicked: {e}"),
            },
        };
        if let Err(e) = inner.journal.lock().expect("journal").append(ev) {
            log::error!("{e}");
        }
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    let v = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    v.strip_prefix("Bearer ").map(str::trim)
}

#[derive(Deserialize)]
struct DatasetQuery {
    dataset: Option<String>,
    format: Option<String>,
}

fn pick_dataset<'a>(inner: &'a Inner, requested: Option<&str>) -> Result<&'a str, Response> {
    match requested {
        Some(d) => inner
            .stores
            .get_key_value(d)
            .map(|(k, _)| k.as_str())
            .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("unknown dataset {d:?}"))),
        None if inner.stores.len() == 1 => Ok(inner.stores.keys().next().expect("one store")),
        None => Err(error(StatusCode::BAD_REQUEST, "dataset query parameter required")),
    }
}

async fn submit(
    State(inner): State<Arc<Inner>>,
    Query(q): Query<DatasetQuery>,
    headers: HeaderMap,
    body: String,
) -> Response {
    let Some(token) = bearer(&headers)
        .map(sha256_hex)
        .filter(|h| inner.token_hashes.contains(h))
    else {
        return error(StatusCode::UNAUTHORIZED, "missing or invalid bearer token");
    };
    let dataset = match pick_dataset(&inner, q.dataset.as_deref()) {
        Ok(d) => d.to_string(),
        Err(r) => return r,
    };
    let submission: Submission = match serde_json::from_str(&body) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed submission: {e}")),
    };
    if let Some(v) = submission.violations().first() {
        return error(StatusCode::BAD_REQUEST, format!("malformed submission: {v}"));
    }
    let known = inner.stores[&dataset].segment_ids();
    let unknown: Vec<&str> = submission
        .segments
        .iter()
        .map(|s| s.segment_id.as_str())
        .filter(|id| !known.contains(*id))
        .collect();
    if !unknown.is_empty() {
        return (
            StatusCode::BAD_REQUEST,
            Json(json!({ "error": "unknown segments", "segments": unknown })),
        )
            .into_response();
    }
    let id = uuid::Uuid::new_v4().to_string();
    {
        let mut j = inner.journal.lock().expect("journal");
        let now = inner.clock.now();
        let since = now - inner.window;
        let used = j
            .records
            .values()
            .filter(|r| r.token == token && r.submitted > since)
            .count();
        if used >= inner.rate_limit {
            return error(
                StatusCode::TOO_MANY_REQUESTS,
                format!("rate limit of {} submissions per window reached", inner.rate_limit),
            );
        }
        let ev = Event::Submitted {
            id: id.clone(),
            dataset: dataset.clone(),
            token,
            at: stamp(now),
            submission,
        };
        if let Err(e) = j.append(ev) {
            return error(StatusCode::INTERNAL_SERVER_ERROR, e);
        }
    }
    if let Some(tx) = inner.queues.lock().expect("queues").get(&dataset) {
        let _ = tx.send(id.clone());
    }
    (
        StatusCode::ACCEPTED,
        Json(json!({ "submission_id": id, "status": Status::Queued })),
    )
        .into_response()
}

async fn status(State(inner): State<Arc<Inner>>, UrlPath(id): UrlPath<String>) -> Response {
    let j = inner.journal.lock().expect("journal");
    let Some(r) = j.records.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no submission {id}"));
    };
    Json(json!({
        "submission_id": r.id,
        "dataset": r.dataset,
        "method_name": r.submission.method_name,
        "submitted_at": r.submitted_at,
        "status": r.status,
        "history": r.history,
        "report": r.report,
        "error": r.error,
    }))
    .into_response()
}

async fn board(State(inner): State<Arc<Inner>>, Query(q): Query<DatasetQuery>, headers: HeaderMap) -> Response {
    let dataset = match pick_dataset(&inner, q.dataset.as_deref()) {
        Ok(d) => d.to_string(),
        Err(r) => return r,
    };
    let entries = leaderboard(&inner.journal.lock().expect("journal").records, &dataset);
    let wants_csv = q.format.as_deref() == Some("csv")
        || headers
            .get(header::ACCEPT)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.contains("text/csv"));
    if wants_csv {
        (
            [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
            leaderboard_csv(&entries),
        )
            .into_response()
    } else {
        let body = serde_json::to_string_pretty(&entries).expect("entries serialize");
        ([(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}
