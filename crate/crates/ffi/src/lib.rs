//! C ABI over the adqa toolkit.
//!
//! Every fallible call returns an [`AdqaStatus`]; on failure the message is
//! available from [`adqa_last_error`] until the next call on the same
//! thread. Strings handed out by the library are released with
//! [`adqa_string_free`], handles with their own `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use adqa::config::Config;
use adqa::evaluation::{evaluate_submission, QuestionStore};
use adqa::ingest::{self, Split};
use adqa::llm::Gateway;
use adqa::pipeline;
use adqa::similarity::CiderCorpus;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    DomainError = 4,
    Panic = 5,
}

/// Model provider connection.
pub struct AdqaGateway {
    inner: Gateway,
    config: Config,
}

/// Loaded question store.
pub struct AdqaStore {
    inner: QuestionStore,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

struct Fail(AdqaStatus, String);

impl Fail {
    fn input(e: impl ToString) -> Self {
        Fail(AdqaStatus::InvalidInput, e.to_string())
    }

    fn domain(e: impl ToString) -> Self {
        Fail(AdqaStatus::DomainError, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AdqaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AdqaStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            AdqaStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(AdqaStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AdqaStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(AdqaStatus::NullPointer, format!("{name} is null")));
    }
    *out = value;
    Ok(())
}

unsafe fn put_json(out: *mut *mut c_char, value: &impl serde::Serialize) -> Result<(), Fail> {
    let s = serde_json::to_string(value).map_err(Fail::domain)?;
    let c = CString::new(s).map_err(Fail::domain)?;
    put(out, c.into_raw(), "out")
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after success.
/// Owned by the library.
#[no_mangle]
pub extern "C" fn adqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn adqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Share of the dialogue-to-human CC gap closed by a method, in percent.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn adqa_accuracy_ratio(
    cc_method: f64,
    cc_dialog: f64,
    cc_human: f64,
    out: *mut f64,
) -> AdqaStatus {
    guard(|| {
        let r = adqa::answering::accuracy_ratio(cc_method, cc_dialog, cc_human).map_err(Fail::domain)?;
        put(out, r, "out")
    })
}

/// CIDEr of `candidate` against `reference`, with document frequencies
/// from `corpus_json`, a JSON array of strings.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adqa_cider(
    candidate: *const c_char,
    reference: *const c_char,
    corpus_json: *const c_char,
    out: *mut f64,
) -> AdqaStatus {
    guard(|| {
        let cand = text(candidate, "candidate")?;
        let refr = text(reference, "reference")?;
        let docs: Vec<String> = serde_json::from_str(text(corpus_json, "corpus_json")?).map_err(Fail::input)?;
        let score = CiderCorpus::new(&docs).score(cand, refr).map_err(Fail::domain)?;
        put(out, score, "out")
    })
}

/// Opens a gateway from TOML config text (empty for defaults, which use
/// the built-in mock provider).
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adqa_gateway_new(config_toml: *const c_char, out: *mut *mut AdqaGateway) -> AdqaStatus {
    guard(|| {
        let config = Config::from_toml(text(config_toml, "config_toml")?).map_err(Fail::input)?;
        let inner = Gateway::from_config(&config.provider).map_err(Fail::input)?;
        put(out, Box::into_raw(Box::new(AdqaGateway { inner, config })), "out")
    })
}

/// # Safety
/// `gw` must come from [`adqa_gateway_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn adqa_gateway_free(gw: *mut AdqaGateway) {
    if !gw.is_null() {
        drop(Box::from_raw(gw));
    }
}

/// Aligns two JSONL transcripts; writes the mapping as JSON to `out`.
/// Unlabelled lines are classified through the gateway first.
///
/// # Safety
/// `gw` must be a live gateway handle; strings valid; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adqa_align(
    gw: *const AdqaGateway,
    track1_jsonl: *const c_char,
    track2_jsonl: *const c_char,
    out: *mut *mut c_char,
) -> AdqaStatus {
    guard(|| {
        let gw = gw.as_ref().ok_or(Fail(AdqaStatus::NullPointer, "gw is null".into()))?;
        let (t1, _) =
            ingest::parse_transcript_str(text(track1_jsonl, "track1_jsonl")?, "track1").map_err(Fail::input)?;
        let (t2, _) =
            ingest::parse_transcript_str(text(track2_jsonl, "track2_jsonl")?, "track2").map_err(Fail::input)?;
        let cfg = &gw.config.align;
        let t1 = pipeline::ensure_classified(&t1, &gw.inner, cfg).map_err(Fail::domain)?;
        let t2 = pipeline::ensure_classified(&t2, &gw.inner, cfg).map_err(Fail::domain)?;
        let aligned = pipeline::align_tracks(&t1, &t2, cfg).map_err(Fail::domain)?;
        put_json(out, &aligned)
    })
}

/// # Safety
/// `dir` must be a valid NUL-terminated path; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adqa_store_open(dir: *const c_char, out: *mut *mut AdqaStore) -> AdqaStatus {
    guard(|| {
        let inner = QuestionStore::load(Path::new(text(dir, "dir")?)).map_err(Fail::input)?;
        put(out, Box::into_raw(Box::new(AdqaStore { inner })), "out")
    })
}

/// # Safety
/// `store` must come from [`adqa_store_open`] or be null.
#[no_mangle]
pub unsafe extern "C" fn adqa_store_free(store: *mut AdqaStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Scores a submission (JSON) on the private split; writes the report as
/// JSON to `out`.
///
/// # Safety
/// Handles must be live; strings valid; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adqa_evaluate(
    store: *const AdqaStore,
    gw: *const AdqaGateway,
    submission_json: *const c_char,
    out: *mut *mut c_char,
) -> AdqaStatus {
    guard(|| {
        let store = store
            .as_ref()
            .ok_or(Fail(AdqaStatus::NullPointer, "store is null".into()))?;
        let gw = gw.as_ref().ok_or(Fail(AdqaStatus::NullPointer, "gw is null".into()))?;
        let sub = ingest::parse_submission_str(text(submission_json, "submission_json")?).map_err(Fail::input)?;
        let report = evaluate_submission(&sub, &store.inner, Split::Private, &gw.inner).map_err(Fail::domain)?;
        put_json(out, &report)
    })
}
