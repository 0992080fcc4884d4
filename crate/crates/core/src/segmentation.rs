//! Splits a full-movie script into plot-aligned video segments.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::llm::{formats, template, Gateway, GatewayError, Shape, TemplateId};
use crate::model::{Track, VideoSegment};
use crate::text::{split_sentences, text_jaccard};

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("plot synopsis is empty")]
    EmptyPlot,
    #[error("track has no lines")]
    EmptyTrack,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// A contiguous run of script lines and the plot sentences it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpan {
    /// Track line index of the first line.
    pub first_line: usize,
    pub last_line: usize,
    pub plot_sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationOutcome {
    pub spans: Vec<SceneSpan>,
    /// Auto-repairs applied to the model's answer.
    pub warnings: Vec<String>,
}

/// A span in 1-based script positions with resolved plot sentence numbers.
#[derive(Debug, Clone, PartialEq)]
struct RawSpan {
    a: i64,
    b: i64,
    sents: Vec<usize>,
}

const MATCH_MIN: f64 = 0.5;

fn response_shape() -> Shape {
    let plot = Shape::OneOf(vec![
        Shape::Null,
        Shape::String,
        Shape::Integer,
        Shape::array(Shape::OneOf(vec![Shape::String, Shape::Integer])),
    ]);
    Shape::array(Shape::Tuple(vec![Shape::Integer, Shape::Integer, plot]))
}

/// Plot sentence numbers (0-based) referenced by one span's third field,
/// plus any text that matched no sentence.
fn resolve_plot(v: &Value, plot: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut found = BTreeSet::new();
    let mut unmatched = Vec::new();
    let visit = |item: &Value, found: &mut BTreeSet<usize>, unmatched: &mut Vec<String>| match item {
        Value::Number(n) => match n.as_u64() {
            Some(k) if k >= 1 && (k as usize) <= plot.len() => {
                found.insert(k as usize - 1);
            }
            _ => unmatched.push(n.to_string()),
        },
        Value::String(s) => {
            let s = s.trim();
            if s.is_empty() || s.eq_ignore_ascii_case("none") {
                return;
            }
            for piece in split_sentences(s) {
                match match_sentence(&piece, plot) {
                    Some(k) => {
                        found.insert(k);
                    }
                    None => unmatched.push(piece),
                }
            }
        }
        _ => {}
    };
    match v {
        Value::Array(items) => {
            for it in items {
                visit(it, &mut found, &mut unmatched);
            }
        }
        other => visit(other, &mut found, &mut unmatched),
    }
    (found.into_iter().collect(), unmatched)
}

fn match_sentence(piece: &str, plot: &[String]) -> Option<usize> {
    let norm = |s: &str| s.trim().to_lowercase();
    if let Some(k) = plot.iter().position(|p| norm(p) == norm(piece)) {
        return Some(k);
    }
    let (k, best) = plot
        .iter()
        .enumerate()
        .map(|(k, p)| (k, text_jaccard(p, piece)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    (best >= MATCH_MIN).then_some(k)
}

fn raw_spans(v: &Value, plot: &[String]) -> (Vec<RawSpan>, Vec<String>) {
    let mut spans = Vec::new();
    let mut unmatched = Vec::new();
    for row in v.as_array().into_iter().flatten() {
        let Some(r) = row.as_array() else { continue };
        let (Some(a), Some(b)) = (r.first().and_then(Value::as_i64), r.get(1).and_then(Value::as_i64)) else {
            continue;
        };
        let (sents, um) = resolve_plot(r.get(2).unwrap_or(&Value::Null), plot);
        unmatched.extend(um);
        spans.push(RawSpan { a, b, sents });
    }
    (spans, unmatched)
}

fn problems(spans: &[RawSpan], n_lines: usize, n_plot: usize) -> Vec<String> {
    let n = n_lines as i64;
    let mut out = Vec::new();
    if spans.is_empty() {
        out.push("no scenes returned".into());
        return out;
    }
    for s in spans {
        if s.a < 1 || s.b > n || s.a > s.b {
            out.push(format!(
                "scene ({}, {}) is not a valid line range within 1..{n}",
                s.a, s.b
            ));
        }
    }
    if spans[0].a != 1 {
        out.push(format!("the first scene must start at line 1, not {}", spans[0].a));
    }
    for w in spans.windows(2) {
        if w[1].a > w[0].b + 1 {
            out.push(format!("lines {}..{} belong to no scene", w[0].b + 1, w[1].a - 1));
        } else if w[1].a <= w[0].b {
            out.push(format!(
                "scenes ({}, {}) and ({}, {}) overlap or are out of order",
                w[0].a, w[0].b, w[1].a, w[1].b
            ));
        }
    }
    if let Some(last) = spans.last() {
        if last.b != n {
            out.push(format!("the last scene must end at line {n}, not {}", last.b));
        }
    }
    let mut count = vec![0usize; n_plot];
    for s in spans {
        for &k in &s.sents {
            count[k] += 1;
        }
    }
    for (k, c) in count.iter().enumerate() {
        match c {
            0 => out.push(format!("plot sentence {} is not associated to any scene", k + 1)),
            1 => {}
            _ => out.push(format!("plot sentence {} is associated to {c} scenes", k + 1)),
        }
    }
    let mut prev_max: Option<usize> = None;
    for s in spans {
        if let (Some(&lo), Some(&hi)) = (s.sents.iter().min(), s.sents.iter().max()) {
            if prev_max.is_some_and(|p| lo < p) {
                out.push("plot sentences must follow the scene order".into());
                break;
            }
            prev_max = Some(hi);
        }
    }
    out
}

/// Longest non-decreasing subsequence; returns kept positions.
fn lnds(seq: &[usize]) -> BTreeSet<usize> {
    let n = seq.len();
    let mut len = vec![1usize; n];
    let mut prev = vec![usize::MAX; n];
    for i in 0..n {
        for j in 0..i {
            if seq[j] <= seq[i] && len[j] + 1 > len[i] {
                len[i] = len[j] + 1;
                prev[i] = j;
            }
        }
    }
    let mut keep = BTreeSet::new();
    if let Some(mut i) = (0..n).max_by(|&x, &y| len[x].cmp(&len[y]).then(y.cmp(&x))) {
        loop {
            keep.insert(i);
            if prev[i] == usize::MAX {
                break;
            }
            i = prev[i];
        }
    }
    keep
}

/// Deterministically turns any span list into a valid partition.
fn auto_repair(mut spans: Vec<RawSpan>, n_lines: usize, n_plot: usize, warnings: &mut Vec<String>) -> Vec<RawSpan> {
    let n = n_lines as i64;
    for s in spans.iter_mut() {
        s.a = s.a.clamp(1, n);
        s.b = s.b.clamp(1, n);
    }
    spans.retain(|s| {
        let ok = s.a <= s.b;
        if !ok {
            warnings.push(format!("dropped inverted scene ({}, {})", s.a, s.b));
        }
        ok
    });
    spans.sort_by_key(|s| (s.a, s.b));
    if spans.is_empty() {
        warnings.push("no usable scenes; using one scene for the whole script".into());
        spans.push(RawSpan {
            a: 1,
            b: n,
            sents: vec![],
        });
    }

    // overlaps: cut at the midpoint, dropping spans that vanish
    let mut merged: Vec<RawSpan> = Vec::new();
    for s in spans {
        match merged.last_mut() {
            Some(prev) if s.a <= prev.b => {
                let mid = (s.a + prev.b).div_euclid(2);
                warnings.push(format!(
                    "scenes ({}, {}) and ({}, {}) overlap; cut after line {mid}",
                    prev.a, prev.b, s.a, s.b
                ));
                let next = RawSpan {
                    a: mid + 1,
                    b: s.b,
                    sents: s.sents,
                };
                prev.b = mid.min(prev.b);
                if prev.b < prev.a {
                    let gone = merged.pop().expect("last");
                    merged.push(RawSpan {
                        a: gone.a,
                        b: next.b,
                        sents: [gone.sents, next.sents].concat(),
                    });
                } else if next.a > next.b {
                    prev.sents.extend(next.sents);
                } else {
                    merged.push(next);
                }
            }
            _ => merged.push(s),
        }
    }
    let mut spans = merged;

    // gaps go to the preceding span; a leading gap to the first
    if spans[0].a != 1 {
        warnings.push(format!("lines 1..{} absorbed into the first scene", spans[0].a - 1));
        spans[0].a = 1;
    }
    for k in 1..spans.len() {
        if spans[k].a > spans[k - 1].b + 1 {
            warnings.push(format!(
                "lines {}..{} absorbed into the preceding scene",
                spans[k - 1].b + 1,
                spans[k].a - 1
            ));
            spans[k - 1].b = spans[k].a - 1;
        }
    }
    let last = spans.len() - 1;
    if spans[last].b != n {
        warnings.push(format!("lines {}..{n} absorbed into the last scene", spans[last].b + 1));
        spans[last].b = n;
    }

    // each sentence in at most one span (earliest), in scene order
    let mut seen = BTreeSet::new();
    for s in spans.iter_mut() {
        s.sents.sort_unstable();
        s.sents.dedup();
        s.sents.retain(|k| {
            let fresh = seen.insert(*k);
            if !fresh {
                warnings.push(format!("plot sentence {} kept only in its first scene", k + 1));
            }
            fresh
        });
    }
    let flat: Vec<(usize, usize)> = spans
        .iter()
        .enumerate()
        .flat_map(|(si, s)| s.sents.iter().map(move |&k| (si, k)))
        .collect();
    let keep = lnds(&flat.iter().map(|p| p.1).collect::<Vec<_>>());
    for (pos, &(si, k)) in flat.iter().enumerate() {
        if !keep.contains(&pos) {
            warnings.push(format!("plot sentence {} is out of order; reassigned", k + 1));
            spans[si].sents.retain(|x| *x != k);
        }
    }

    // unassigned sentences go between their assigned neighbours' scenes
    let mut owner: Vec<Option<usize>> = vec![None; n_plot];
    for (si, s) in spans.iter().enumerate() {
        for &k in &s.sents {
            owner[k] = Some(si);
        }
    }
    let mut k = 0;
    while k < n_plot {
        if owner[k].is_some() {
            k += 1;
            continue;
        }
        let start = k;
        while k < n_plot && owner[k].is_none() {
            k += 1;
        }
        let r = k - start;
        let lo = if start == 0 {
            0
        } else {
            owner[start - 1].expect("assigned")
        };
        let hi = if k == n_plot {
            spans.len() - 1
        } else {
            owner[k].expect("assigned")
        };
        for t in 0..r {
            let si = lo + ((t + 1) * (hi - lo)) / (r + 1);
            warnings.push(format!("plot sentence {} attached to scene {}", start + t + 1, si + 1));
            spans[si].sents.push(start + t);
            owner[start + t] = Some(si);
        }
    }
    for s in spans.iter_mut() {
        s.sents.sort_unstable();
    }
    spans
}

fn to_scene_spans(raw: &[RawSpan], track: &Track, plot: &[String]) -> Vec<SceneSpan> {
    raw.iter()
        .map(|s| SceneSpan {
            first_line: track.lines[(s.a - 1) as usize].index,
            last_line: track.lines[(s.b - 1) as usize].index,
            plot_sentences: s.sents.iter().map(|&k| plot[k].clone()).collect(),
        })
        .collect()
}

/// Asks the model for scene boundaries and plot alignment, then guarantees a
/// valid partition of the script.
pub fn segment_movie(
    track: &Track,
    plot: &[String],
    gateway: &Gateway,
) -> Result<SegmentationOutcome, SegmentationError> {
    if plot.iter().all(|s| s.trim().is_empty()) {
        return Err(SegmentationError::EmptyPlot);
    }
    if track.lines.is_empty() {
        return Err(SegmentationError::EmptyTrack);
    }
    let n_lines = track.lines.len();
    let prompt = template::render(
        TemplateId::Segment,
        &template::vars([
            ("movie_script", formats::script(&track.lines)),
            ("plot_synopsis", plot.join(" ")),
        ]),
    )
    .map_err(GatewayError::from)?;
    let shape = response_shape();
    let check = |v: &Value| {
        let (spans, unmatched) = raw_spans(v, plot);
        let mut p = problems(&spans, n_lines, plot.len());
        p.extend(
            unmatched
                .into_iter()
                .map(|u| format!("{u:?} is not a sentence of the plot synopsis")),
        );
        p
    };
    let mut warnings = Vec::new();
    let value = match gateway.complete_checked(&prompt, &shape, &check) {
        Ok(v) => v,
        Err(GatewayError::Schema {
            value: Some(v),
            problems: p,
            ..
        }) if shape.check(&v).is_empty() => {
            warnings.extend(p.into_iter().map(|x| format!("model output: {x}")));
            v
        }
        Err(e) => return Err(e.into()),
    };
    let (raw, _) = raw_spans(&value, plot);
    let spans = if problems(&raw, n_lines, plot.len()).is_empty() {
        raw
    } else {
        auto_repair(raw, n_lines, plot.len(), &mut warnings)
    };
    for w in &warnings {
        log::warn!("{}: {w}", track.movie_id);
    }
    Ok(SegmentationOutcome {
        spans: to_scene_spans(&spans, track, plot),
        warnings,
    })
}

pub fn segment_id(movie_id: &str, k: usize) -> String {
    format!("{movie_id}-seg{:03}", k + 1)
}

/// One segment per span. Times run from the first line's start to the
/// latest end among the span's lines.
pub fn build_segments(spans: &[SceneSpan], track: &Track) -> Vec<VideoSegment> {
    spans
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let lines: Vec<_> = track
                .lines
                .iter()
                .filter(|l| l.index >= s.first_line && l.index <= s.last_line)
                .cloned()
                .collect();
            let start_s = lines.first().map_or(0.0, |l| l.start_s);
            let end_s = lines.iter().map(|l| l.end_s).fold(start_s, f64::max);
            VideoSegment {
                segment_id: segment_id(&track.movie_id, k),
                movie_id: track.movie_id.clone(),
                start_s,
                end_s,
                lines,
                plot_sentences: s.plot_sentences.clone(),
            }
        })
        .collect()
}
