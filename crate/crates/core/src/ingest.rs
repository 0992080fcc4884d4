//! On-disk formats: JSONL transcripts, SubRip, submissions, plots, QA files,
//! dataset manifests and segment files.
//!
//! Every `parse_*_str` function is total: any input yields a value or an
//! [`IngestError`], never a panic. The path-taking variants only add I/O.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    LineKind, Mcqa, OptionLabel, QuestionKind, Submission, Track, TranscriptLine, Validate, VideoSegment,
};
use crate::text::split_sentences;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("line {line_no}: timestamps disagree with line indices")]
    NonMonotonicTimestamps { line_no: usize },
    #[error("cue {cue_no}: {reason}")]
    MalformedCue { cue_no: usize, reason: String },
    #[error("malformed submission: {0}")]
    MalformedSubmission(String),
    #[error("unknown segments: {}", .0.join(", "))]
    UnknownSegment(Vec<String>),
    #[error("plot file is empty")]
    EmptyPlot,
    #[error("question {qid}: {reason}")]
    SchemaViolation { qid: String, reason: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("segments file: {0}")]
    Segments(String),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// A non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    pub line_no: usize,
    pub message: String,
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| IngestError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, contents).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, &s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_file(path)?)?)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("track").to_string()
}

// ---------------------------------------------------------------------------
// Transcripts

#[derive(Debug, Deserialize)]
struct RawLine {
    index: Option<serde_json::Value>,
    start_s: Option<serde_json::Value>,
    end_s: Option<serde_json::Value>,
    text: Option<serde_json::Value>,
    kind: Option<LineKind>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptHeader {
    movie_id: String,
    source_id: String,
}

fn number_field(v: &Option<serde_json::Value>, name: &str, line_no: usize) -> Result<f64> {
    let malformed = |reason: String| IngestError::MalformedLine { line_no, reason };
    match v {
        None => Err(malformed(format!("missing {name:?}"))),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| malformed(format!("{name:?} is not a finite number"))),
    }
}

/// Parses a JSON Lines transcript.
///
/// Each line is `{"index", "start_s", "end_s", "text", "kind"?}`. An optional
/// first line `{"movie_id", "source_id"}` names the track; otherwise both
/// default to `default_id`. Lines out of time order are sorted and reported
/// as warnings; if sorting by time contradicts the declared indices the file
/// is rejected.
pub fn parse_transcript_str(content: &str, default_id: &str) -> Result<(Track, Vec<IngestWarning>)> {
    let mut warnings = Vec::new();
    let mut movie_id = default_id.to_string();
    let mut source_id = default_id.to_string();
    let mut entries: Vec<(usize, TranscriptLine)> = Vec::new();

    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let raw = raw.trim_start_matches('\u{feff}').trim();
        if raw.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| IngestError::MalformedLine {
            line_no,
            reason: format!("invalid JSON: {e}"),
        })?;
        if entries.is_empty() && value.get("movie_id").is_some() && value.get("start_s").is_none() {
            let header: TranscriptHeader = serde_json::from_value(value).map_err(|e| IngestError::MalformedLine {
                line_no,
                reason: format!("invalid header: {e}"),
            })?;
            movie_id = header.movie_id;
            source_id = header.source_id;
            continue;
        }
        let parsed: RawLine = serde_json::from_value(value).map_err(|e| IngestError::MalformedLine {
            line_no,
            reason: e.to_string(),
        })?;
        let index = match &parsed.index {
            Some(v) => v.as_u64().ok_or_else(|| IngestError::MalformedLine {
                line_no,
                reason: "\"index\" must be a non-negative integer".into(),
            })? as usize,
            None => {
                return Err(IngestError::MalformedLine {
                    line_no,
                    reason: "missing \"index\"".into(),
                })
            }
        };
        let start_s = number_field(&parsed.start_s, "start_s", line_no)?;
        let end_s = number_field(&parsed.end_s, "end_s", line_no)?;
        let text = match &parsed.text {
            Some(serde_json::Value::String(s)) => s.clone(),
            _ => {
                return Err(IngestError::MalformedLine {
                    line_no,
                    reason: "\"text\" must be a string".into(),
                })
            }
        };
        let line = TranscriptLine::new(index, start_s, end_s, text, parsed.kind.unwrap_or_default());
        if let Some(v) = line.violations().first() {
            return Err(IngestError::MalformedLine {
                line_no,
                reason: v.rule.clone(),
            });
        }
        entries.push((line_no, line));
    }

    let out_of_order = entries
        .windows(2)
        .find(|w| w[1].1.start_s < w[0].1.start_s)
        .map(|w| w[1].0);
    if let Some(line_no) = out_of_order {
        warnings.push(IngestWarning {
            line_no,
            message: "lines out of time order; re-sorted by start_s".into(),
        });
        entries.sort_by(|a, b| a.1.start_s.total_cmp(&b.1.start_s));
    }
    for w in entries.windows(2) {
        if w[1].1.index <= w[0].1.index {
            return Err(IngestError::NonMonotonicTimestamps { line_no: w[1].0 });
        }
    }
    let lines = entries.into_iter().map(|(_, l)| l).collect();
    Ok((Track::new(movie_id, source_id, lines), warnings))
}

pub fn parse_transcript(path: &Path) -> Result<Track> {
    let (track, warnings) = parse_transcript_str(&read_file(path)?, &file_stem(path))?;
    for w in warnings {
        log::warn!("{}:{}: {}", path.display(), w.line_no, w.message);
    }
    Ok(track)
}

pub fn transcript_to_string(track: &Track) -> String {
    let mut out = serde_json::to_string(&TranscriptHeader {
        movie_id: track.movie_id.clone(),
        source_id: track.source_id.clone(),
    })
    .expect("header serializes");
    out.push('\n');
    for line in &track.lines {
        out.push_str(&serde_json::to_string(line).expect("line serializes"));
        out.push('\n');
    }
    out
}

pub fn write_transcript(path: &Path, track: &Track) -> Result<()> {
    write_file(path, &transcript_to_string(track))
}

// ---------------------------------------------------------------------------
// SubRip

fn parse_srt_time(s: &str) -> Option<f64> {
    let s = s.trim();
    let (hms, millis) = s.split_once([',', '.'])?;
    let mut parts = hms.split(':');
    let h: u64 = parts.next()?.trim().parse().ok()?;
    let m: u64 = parts.next()?.trim().parse().ok()?;
    let sec: u64 = parts.next()?.trim().parse().ok()?;
    if parts.next().is_some() || m >= 60 || sec >= 60 {
        return None;
    }
    let millis = millis.trim();
    if millis.is_empty() || millis.len() > 3 || !millis.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let frac: f64 = format!("0.{millis}").parse().ok()?;
    Some((h * 3600 + m * 60 + sec) as f64 + frac)
}

/// Parses SubRip text into a track of unclassified lines.
pub fn parse_srt_str(content: &str, default_id: &str) -> Result<Track> {
    let content = content.trim_start_matches('\u{feff}').replace("\r\n", "\n");
    let mut lines = Vec::new();
    let blocks = content.split("\n\n").map(str::trim).filter(|b| !b.is_empty());
    for (k, block) in blocks.enumerate() {
        let cue_no = k + 1;
        let malformed = |reason: &str| IngestError::MalformedCue {
            cue_no,
            reason: reason.to_string(),
        };
        let mut rows = block.lines();
        let mut first = rows.next().unwrap_or_default().trim();
        if !first.contains("-->") {
            // cue counter; optional in lenient files
            first = rows.next().ok_or_else(|| malformed("missing timing line"))?.trim();
        }
        let (start, end) = first
            .split_once("-->")
            .ok_or_else(|| malformed("timing line lacks \"-->\""))?;
        let start_s = parse_srt_time(start).ok_or_else(|| malformed("unparseable start time"))?;
        // positional suffixes such as "X1:..." may follow the end time
        let end_field = end.split_whitespace().next().unwrap_or_default();
        let end_s = parse_srt_time(end_field).ok_or_else(|| malformed("unparseable end time"))?;
        if !(end_s > start_s) {
            return Err(malformed("end time not after start time"));
        }
        let text = rows
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        if text.is_empty() {
            return Err(malformed("cue has no text"));
        }
        lines.push(TranscriptLine::new(
            lines.len(),
            start_s,
            end_s,
            text,
            LineKind::Unclassified,
        ));
    }
    lines.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    for (i, l) in lines.iter_mut().enumerate() {
        l.index = i;
    }
    Ok(Track::new(default_id, default_id, lines))
}

pub fn parse_srt(path: &Path) -> Result<Track> {
    parse_srt_str(&read_file(path)?, &file_stem(path))
}

/// Reads a `.srt` or `.jsonl` transcript by extension.
pub fn load_track(path: &Path) -> Result<Track> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("srt") => parse_srt(path),
        _ => parse_transcript(path),
    }
}

// ---------------------------------------------------------------------------
// Submissions

pub fn parse_submission_str(content: &str) -> Result<Submission> {
    let mut sub: Submission =
        serde_json::from_str(content).map_err(|e| IngestError::MalformedSubmission(e.to_string()))?;
    for seg in &mut sub.segments {
        seg.ads.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    }
    if let Some(v) = sub.violations().first() {
        return Err(IngestError::MalformedSubmission(v.to_string()));
    }
    Ok(sub)
}

pub fn parse_submission(path: &Path) -> Result<Submission> {
    parse_submission_str(&read_file(path)?)
}

/// Rejects submissions naming segments absent from `known`.
pub fn check_submission_segments(sub: &Submission, known: &HashSet<String>) -> Result<()> {
    let unknown: Vec<String> = sub
        .segments
        .iter()
        .filter(|s| !known.contains(&s.segment_id))
        .map(|s| s.segment_id.clone())
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(IngestError::UnknownSegment(unknown))
    }
}

// ---------------------------------------------------------------------------
// Plots

/// One sentence per non-empty line; a single paragraph is split on sentence
/// boundaries instead.
pub fn parse_plot_str(content: &str) -> Result<Vec<String>> {
    let rows: Vec<&str> = content
        .lines()
        .map(|l| l.trim_start_matches('\u{feff}').trim())
        .filter(|l| !l.is_empty())
        .collect();
    let sentences = match rows.as_slice() {
        [] => Vec::new(),
        [single] => split_sentences(single),
        many => many.iter().map(|s| s.to_string()).collect(),
    };
    if sentences.is_empty() {
        return Err(IngestError::EmptyPlot);
    }
    Ok(sentences)
}

pub fn parse_plot(path: &Path) -> Result<Vec<String>> {
    parse_plot_str(&read_file(path)?)
}

// ---------------------------------------------------------------------------
// QA files

/// On-disk question record. Field names follow the generation prompt's
/// output format so validated model output can be stored as-is.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QaRecord {
    pub qid: String,
    pub segment_id: String,
    pub kind: QuestionKind,
    pub question: String,
    pub options: Vec<String>,
    pub correct_answer: String,
    pub rationale: String,
}

/// Splits `"B) some text"` into its label and text.
pub fn split_labeled_option(s: &str) -> Option<(OptionLabel, &str)> {
    let s = s.trim();
    let s = s.strip_prefix("- ").unwrap_or(s);
    let mut chars = s.char_indices();
    let (_, c) = chars.next()?;
    if !c.is_ascii_alphabetic() {
        return None;
    }
    let (pos, close) = chars.next()?;
    if close != ')' {
        return None;
    }
    Some((OptionLabel::new(c), s[pos + 1..].trim()))
}

pub fn qa_record_from_mcqa(q: &Mcqa) -> QaRecord {
    let options = q
        .options
        .iter()
        .enumerate()
        .map(|(i, o)| match OptionLabel::from_position(i) {
            Some(l) => format!("{l}) {o}"),
            None => o.clone(),
        })
        .collect();
    QaRecord {
        qid: q.qid.clone(),
        segment_id: q.segment_id.clone(),
        kind: q.kind,
        question: q.question.clone(),
        options,
        correct_answer: format!("{}) {}", q.correct, q.correct_text().unwrap_or_default()),
        rationale: q.rationale.clone(),
    }
}

pub fn mcqa_from_qa_record(r: QaRecord) -> Result<Mcqa> {
    let violation = |reason: String| IngestError::SchemaViolation {
        qid: r.qid.clone(),
        reason,
    };
    if r.options.len() != 5 {
        return Err(violation(format!("expected 5 options, found {}", r.options.len())));
    }
    let mut options = Vec::with_capacity(5);
    for (i, raw) in r.options.iter().enumerate() {
        let (label, text) =
            split_labeled_option(raw).ok_or_else(|| violation(format!("option {raw:?} lacks an \"X) \" label")))?;
        if !label.is_valid() {
            return Err(violation(format!("option label {label} outside A-E")));
        }
        if label.position() != Some(i) {
            return Err(violation(format!("option {raw:?} out of order")));
        }
        options.push(text.to_string());
    }
    let correct = match split_labeled_option(&r.correct_answer) {
        Some((label, text)) => {
            let pos = label
                .position()
                .ok_or_else(|| violation(format!("correct answer label {label} outside A-E")))?;
            if !text.is_empty() && text != options[pos] {
                return Err(violation("correct_answer text does not match its option".into()));
            }
            label
        }
        None => OptionLabel::try_from(r.correct_answer.clone())
            .ok()
            .filter(|l| l.is_valid())
            .ok_or_else(|| violation(format!("unparseable correct_answer {:?}", r.correct_answer)))?,
    };
    let q = Mcqa {
        qid: r.qid.clone(),
        segment_id: r.segment_id.clone(),
        kind: r.kind,
        question: r.question.clone(),
        options,
        correct,
        rationale: r.rationale.clone(),
    };
    if let Some(v) = q.violations().first() {
        return Err(violation(v.to_string()));
    }
    Ok(q)
}

pub fn qa_to_string(questions: &[Mcqa]) -> String {
    let records: Vec<QaRecord> = questions.iter().map(qa_record_from_mcqa).collect();
    let mut s = serde_json::to_string_pretty(&records).expect("records serialize");
    s.push('\n');
    s
}

pub fn parse_qa_str(content: &str) -> Result<Vec<Mcqa>> {
    let values: Vec<serde_json::Value> = serde_json::from_str(content)?;
    let mut out = Vec::with_capacity(values.len());
    let mut seen = HashSet::new();
    for (i, v) in values.into_iter().enumerate() {
        let qid = v
            .get("qid")
            .and_then(|q| q.as_str())
            .map(str::to_owned)
            .unwrap_or_else(|| format!("#{i}"));
        let record: QaRecord = serde_json::from_value(v).map_err(|e| IngestError::SchemaViolation {
            qid: qid.clone(),
            reason: e.to_string(),
        })?;
        if !seen.insert(record.qid.clone()) {
            return Err(IngestError::SchemaViolation {
                qid,
                reason: "duplicate qid".into(),
            });
        }
        out.push(mcqa_from_qa_record(record)?);
    }
    Ok(out)
}

pub fn write_qa_file(path: &Path, questions: &[Mcqa]) -> Result<()> {
    write_file(path, &qa_to_string(questions))
}

pub fn parse_qa_file(path: &Path) -> Result<Vec<Mcqa>> {
    parse_qa_str(&read_file(path)?)
}

// ---------------------------------------------------------------------------
// Manifests

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Public,
    #[default]
    Private,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMovie {
    pub movie_id: String,
    pub track_files: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments_file: Option<PathBuf>,
    #[serde(default)]
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_id: String,
    pub movies: Vec<ManifestMovie>,
}

impl Manifest {
    /// Checks id uniqueness, track counts and that referenced files exist,
    /// resolving relative paths against `base`.
    pub fn resolve(mut self, base: &Path) -> Result<Self> {
        let mut seen = HashSet::new();
        let resolve = |p: &mut PathBuf| -> Result<()> {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.exists() {
                return Err(IngestError::Manifest(format!("{} does not exist", p.display())));
            }
            Ok(())
        };
        for movie in &mut self.movies {
            if !seen.insert(movie.movie_id.clone()) {
                return Err(IngestError::Manifest(format!(
                    "duplicate movie_id {:?}",
                    movie.movie_id
                )));
            }
            if movie.track_files.is_empty() || movie.track_files.len() > 2 {
                return Err(IngestError::Manifest(format!(
                    "movie {:?} must list 1 or 2 track files",
                    movie.movie_id
                )));
            }
            for p in movie.track_files.iter_mut() {
                resolve(p)?;
            }
            if let Some(p) = movie.plot_file.as_mut() {
                resolve(p)?;
            }
            if let Some(p) = movie.segments_file.as_mut() {
                resolve(p)?;
            }
        }
        Ok(self)
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let manifest: Manifest =
        serde_json::from_str(&read_file(path)?).map_err(|e| IngestError::Manifest(e.to_string()))?;
    manifest.resolve(path.parent().unwrap_or(Path::new(".")))
}

// ---------------------------------------------------------------------------
// Segment files

/// One row of a segments file: a contiguous line range of one movie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub segment_id: String,
    pub movie_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub first_line: usize,
    pub last_line: usize,
    #[serde(default)]
    pub plot_sentences: Vec<String>,
}

impl SegmentRecord {
    pub fn from_segment(seg: &VideoSegment) -> Self {
        Self {
            segment_id: seg.segment_id.clone(),
            movie_id: seg.movie_id.clone(),
            start_s: seg.start_s,
            end_s: seg.end_s,
            first_line: seg.lines.first().map(|l| l.index).unwrap_or(0),
            last_line: seg.lines.last().map(|l| l.index).unwrap_or(0),
            plot_sentences: seg.plot_sentences.clone(),
        }
    }
}

pub fn write_segments(path: &Path, segments: &[VideoSegment]) -> Result<()> {
    let records: Vec<SegmentRecord> = segments.iter().map(SegmentRecord::from_segment).collect();
    write_json(path, &records)
}

pub fn parse_segments(path: &Path) -> Result<Vec<SegmentRecord>> {
    serde_json::from_str(&read_file(path)?).map_err(|e| IngestError::Segments(e.to_string()))
}

/// Rebuilds video segments from segment records and the tracks they index.
pub fn materialize_segments(records: &[SegmentRecord], tracks: &[Track]) -> Result<Vec<VideoSegment>> {
    let by_movie: BTreeMap<&str, &Track> = tracks.iter().map(|t| (t.movie_id.as_str(), t)).collect();
    records
        .iter()
        .map(|r| {
            let track = by_movie
                .get(r.movie_id.as_str())
                .ok_or_else(|| IngestError::Segments(format!("no transcript for movie {:?}", r.movie_id)))?;
            if r.first_line > r.last_line {
                return Err(IngestError::Segments(format!(
                    "segment {:?} has first_line > last_line",
                    r.segment_id
                )));
            }
            let lines: Vec<TranscriptLine> = track
                .lines
                .iter()
                .filter(|l| l.index >= r.first_line && l.index <= r.last_line)
                .cloned()
                .collect();
            let seg = VideoSegment {
                segment_id: r.segment_id.clone(),
                movie_id: r.movie_id.clone(),
                start_s: r.start_s,
                end_s: r.end_s,
                lines,
                plot_sentences: r.plot_sentences.clone(),
            };
            if let Some(v) = seg.violations().first() {
                return Err(IngestError::Segments(format!("segment {:?}: {v}", r.segment_id)));
            }
            Ok(seg)
        })
        .collect()
}
