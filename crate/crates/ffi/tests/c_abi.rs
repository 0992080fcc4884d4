use std::ffi::{c_char, CStr, CString};
use std::ptr;

use adqa::evaluation::{build_store, StoredSegment};
use adqa::ingest::Split;
use adqa::llm::{Gateway, MockBackend};
use adqa::model::{LineKind, Track, TranscriptLine};
use adqa::qagen::{generate_all, KindSelection, NuStyle};
use adqa_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> serde_json::Value {
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    adqa_string_free(p);
    v
}

const NOUNS: [&str; 8] = ["lamp", "coat", "knife", "map", "radio", "bottle", "key", "book"];

/// Labelled track; track 2 is shifted by 4 s with reworded ADs.
fn track(second: bool) -> Track {
    let mut lines = Vec::new();
    for (k, noun) in NOUNS.iter().enumerate() {
        let t = 20.0 * k as f64 + if second { 4.0 } else { 0.0 };
        lines.push(TranscriptLine::new(
            2 * k,
            t,
            t + 2.0,
            format!("We should take the {noun} now"),
            LineKind::Dialogue,
        ));
        let ad = if second {
            format!("A man grabs the {noun}.")
        } else {
            format!("He picks up the {noun}.")
        };
        lines.push(TranscriptLine::new(2 * k + 1, t + 5.0, t + 8.0, ad, LineKind::Ad));
    }
    Track::new("film", if second { "two" } else { "one" }, lines)
}

fn jsonl(t: &Track) -> String {
    t.lines
        .iter()
        .map(|l| serde_json::to_string(l).unwrap() + "\n")
        .collect()
}

#[test]
fn align_through_the_c_abi() {
    unsafe {
        let mut gw = ptr::null_mut();
        assert_eq!(adqa_gateway_new(c("").as_ptr(), &mut gw), AdqaStatus::Ok);
        let mut out = ptr::null_mut();
        let st = adqa_align(
            gw,
            c(&jsonl(&track(false))).as_ptr(),
            c(&jsonl(&track(true))).as_ptr(),
            &mut out,
        );
        assert_eq!(st, AdqaStatus::Ok, "{:?}", CStr::from_ptr(adqa_last_error()));
        let v = take(out);
        assert_eq!(v["mapping"]["pairs"].as_array().unwrap().len(), 8);
        let offset = v["transform"]["pieces"][0]["offset"].as_f64().unwrap();
        assert!((offset - 4.0).abs() < 1e-9, "{offset}");

        let bad = adqa_align(gw, c("{not json").as_ptr(), c("").as_ptr(), &mut out);
        assert_eq!(bad, AdqaStatus::InvalidInput);
        assert!(!CStr::from_ptr(adqa_last_error()).to_bytes().is_empty());
        assert_eq!(
            adqa_align(ptr::null(), c("").as_ptr(), c("").as_ptr(), &mut out),
            AdqaStatus::NullPointer
        );
        adqa_gateway_free(gw);
    }
}

#[test]
fn evaluate_through_the_c_abi() {
    let dir = tempfile::tempdir().unwrap();
    let gw = Gateway::mock(MockBackend::new());
    let t = track(false);
    let plot = vec![
        "A man gathers his things.".to_string(),
        "He leaves with a book.".to_string(),
    ];
    let segs = adqa::pipeline::segment(&t, &plot, &gw).unwrap().segments;
    let qs = generate_all(&segs, KindSelection::Both, NuStyle::Summary, &gw)
        .unwrap()
        .questions;
    let stored = segs
        .iter()
        .cloned()
        .map(|segment| StoredSegment {
            split: Split::Private,
            segment,
        })
        .collect();
    build_store("ds", stored, qs, None, &gw)
        .unwrap()
        .save(dir.path())
        .unwrap();

    unsafe {
        let mut store = ptr::null_mut();
        assert_eq!(
            adqa_store_open(c(dir.path().to_str().unwrap()).as_ptr(), &mut store),
            AdqaStatus::Ok
        );
        let mut gw = ptr::null_mut();
        assert_eq!(adqa_gateway_new(c("").as_ptr(), &mut gw), AdqaStatus::Ok);
        let sub = c(r#"{"method_name": "silence", "segments": []}"#);
        let mut out = ptr::null_mut();
        let st = adqa_evaluate(store, gw, sub.as_ptr(), &mut out);
        assert_eq!(st, AdqaStatus::Ok, "{:?}", CStr::from_ptr(adqa_last_error()));
        let v = take(out);
        assert_eq!(v["method_name"], "silence");
        // an empty submission scores exactly the dialogue-only baseline
        for kind in v["kinds"].as_object().unwrap().values() {
            assert_eq!(kind["cc"], kind["cc_dialog"]);
        }
        let ghost = c(r#"{"method_name": "x", "segments": [{"segment_id": "ghost", "ads": []}]}"#);
        assert_eq!(
            adqa_evaluate(store, gw, ghost.as_ptr(), &mut out),
            AdqaStatus::DomainError
        );
        adqa_gateway_free(gw);
        adqa_store_free(store);
        let missing = adqa_store_open(c("/nonexistent/store").as_ptr(), &mut store);
        assert_eq!(missing, AdqaStatus::InvalidInput);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/adqa.h")).unwrap();
    for sym in [
        "adqa_version",
        "adqa_last_error",
        "adqa_string_free",
        "adqa_accuracy_ratio",
        "adqa_cider",
        "adqa_gateway_new",
        "adqa_gateway_free",
        "adqa_align",
        "adqa_store_open",
        "adqa_store_free",
        "adqa_evaluate",
        "typedef struct AdqaGateway AdqaGateway",
        "typedef struct AdqaStore AdqaStore",
        "ADQA_STATUS_PANIC = 5",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}
