//! Shared domain types.
//!
//! Everything here is a plain value: constructed, validated, serialized.
//! Types deliberately admit invalid states (an MCQA with four options, a line
//! with an inverted interval) so that [`Validate`] can report every violated
//! invariant instead of failing on the first.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// One broken invariant, with a path pointing at the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub rule: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

/// Invariant checking. Never fails; an empty list means the value is valid.
pub trait Validate {
    fn violations(&self) -> Vec<Violation>;

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Returns every violated invariant of `entity`.
pub fn validate<T: Validate + ?Sized>(entity: &T) -> Vec<Violation> {
    entity.violations()
}

fn prefixed(prefix: &str, inner: Vec<Violation>) -> impl Iterator<Item = Violation> + '_ {
    inner.into_iter().map(move |v| Violation {
        path: format!("{prefix}.{}", v.path),
        rule: v.rule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineKind {
    #[serde(rename = "AD", alias = "ad", alias = "Ad")]
    Ad,
    #[serde(rename = "Dialogue", alias = "dialogue", alias = "dialog", alias = "Dialog")]
    Dialogue,
    #[serde(rename = "Unclassified", alias = "unclassified")]
    #[default]
    Unclassified,
}

/// One timestamped sentence of a transcribed audio track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
    #[serde(default)]
    pub kind: LineKind,
}

impl TranscriptLine {
    pub fn new(index: usize, start_s: f64, end_s: f64, text: impl Into<String>, kind: LineKind) -> Self {
        Self {
            index,
            start_s,
            end_s,
            text: text.into(),
            kind,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn is_ad(&self) -> bool {
        self.kind == LineKind::Ad
    }

    pub fn is_dialogue(&self) -> bool {
        self.kind == LineKind::Dialogue
    }
}

impl Validate for TranscriptLine {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.start_s.is_finite() || self.start_s < 0.0 {
            out.push(Violation::new("start_s", "start_s >= 0"));
        }
        if !self.end_s.is_finite() || !(self.end_s > self.start_s) {
            out.push(Violation::new("end_s", "end_s > start_s"));
        }
        if self.text.trim().is_empty() {
            out.push(Violation::new("text", "text non-empty"));
        }
        out
    }
}

/// A complete transcribed audio source of one movie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub movie_id: String,
    pub source_id: String,
    pub lines: Vec<TranscriptLine>,
}

impl Track {
    pub fn new(movie_id: impl Into<String>, source_id: impl Into<String>, lines: Vec<TranscriptLine>) -> Self {
        Self {
            movie_id: movie_id.into(),
            source_id: source_id.into(),
            lines,
        }
    }

    pub fn ads(&self) -> impl Iterator<Item = &TranscriptLine> {
        self.lines.iter().filter(|l| l.is_ad())
    }

    pub fn dialogue(&self) -> impl Iterator<Item = &TranscriptLine> {
        self.lines.iter().filter(|l| l.is_dialogue())
    }

    pub fn is_classified(&self) -> bool {
        self.lines.iter().all(|l| l.kind != LineKind::Unclassified)
    }

    pub fn line(&self, index: usize) -> Option<&TranscriptLine> {
        self.lines
            .binary_search_by_key(&index, |l| l.index)
            .ok()
            .map(|pos| &self.lines[pos])
    }
}

impl Validate for Track {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.movie_id.trim().is_empty() {
            out.push(Violation::new("movie_id", "movie_id non-empty"));
        }
        for (pos, line) in self.lines.iter().enumerate() {
            out.extend(prefixed(&format!("lines[{pos}]"), line.violations()));
        }
        for (pos, pair) in self.lines.windows(2).enumerate() {
            if pair[1].start_s < pair[0].start_s {
                out.push(Violation::new(format!("lines[{}]", pos + 1), "lines sorted by start_s"));
            }
            if pair[1].index <= pair[0].index {
                out.push(Violation::new(
                    format!("lines[{}]", pos + 1),
                    "strictly increasing index",
                ));
            }
        }
        out
    }
}

/// One linear piece of a track-1 to track-2 time mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformPiece {
    pub valid_from_s: f64,
    pub valid_to_s: f64,
    pub slope: f64,
    pub offset: f64,
}

impl TransformPiece {
    pub fn apply(&self, t: f64) -> f64 {
        self.slope * t + self.offset
    }

    pub fn invert(&self, t2: f64) -> f64 {
        (t2 - self.offset) / self.slope
    }
}

/// Piecewise-linear mapping from track-1 time to track-2 time.
///
/// Times outside the covered range use the nearest piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTransform {
    pub pieces: Vec<TransformPiece>,
}

impl TimeTransform {
    pub fn linear(slope: f64, offset: f64) -> Self {
        Self {
            pieces: vec![TransformPiece {
                valid_from_s: 0.0,
                valid_to_s: f64::MAX,
                slope,
                offset,
            }],
        }
    }

    /// Piece whose track-1 validity range contains `t`.
    pub fn piece_at(&self, t: f64) -> &TransformPiece {
        let idx = self
            .pieces
            .iter()
            .position(|p| t < p.valid_to_s)
            .unwrap_or(self.pieces.len() - 1);
        &self.pieces[idx]
    }

    pub fn apply(&self, t: f64) -> f64 {
        self.piece_at(t).apply(t)
    }

    /// Piece whose image in track-2 time contains `t2`; nearest piece otherwise.
    pub fn piece_for_track2(&self, t2: f64) -> &TransformPiece {
        let mut best = &self.pieces[0];
        let mut best_dist = f64::INFINITY;
        for piece in &self.pieces {
            let lo = piece.apply(piece.valid_from_s);
            let hi = piece.apply(piece.valid_to_s.min(1.0e12));
            if t2 >= lo && t2 < hi {
                return piece;
            }
            let dist = if t2 < lo { lo - t2 } else { t2 - hi };
            if dist < best_dist {
                best_dist = dist;
                best = piece;
            }
        }
        best
    }

    pub fn invert(&self, t2: f64) -> f64 {
        self.piece_for_track2(t2).invert(t2)
    }

    /// Piece boundaries strictly inside the covered range.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.valid_from_s).collect()
    }
}

impl Validate for TimeTransform {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.pieces.is_empty() {
            out.push(Violation::new("pieces", "at least one piece"));
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if !(p.slope > 0.0) || !p.slope.is_finite() {
                out.push(Violation::new(format!("pieces[{i}].slope"), "slope > 0"));
            }
            if !p.offset.is_finite() {
                out.push(Violation::new(format!("pieces[{i}].offset"), "offset finite"));
            }
            if !(p.valid_to_s > p.valid_from_s) {
                out.push(Violation::new(format!("pieces[{i}]"), "valid_to_s > valid_from_s"));
            }
        }
        for (i, w) in self.pieces.windows(2).enumerate() {
            if w[0].valid_to_s != w[1].valid_from_s {
                out.push(Violation::new(
                    format!("pieces[{}]", i + 1),
                    "pieces contiguous and non-overlapping",
                ));
            }
        }
        out
    }
}

/// A cross-track AD correspondence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedPair {
    /// Track-1 AD line index.
    pub t1: usize,
    /// Track-2 AD line index.
    pub t2: usize,
    /// Best overlap score over the passes that produced this pair.
    pub overlap: f64,
    /// Score from projecting the track-1 AD into track-2 time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<f64>,
    /// Score from projecting the track-2 AD into track-1 time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdMapping {
    pub threshold: f64,
    pub buffer_s: f64,
    pub pairs: Vec<MappedPair>,
    pub non_aligned_t1: BTreeSet<usize>,
    pub non_aligned_t2: BTreeSet<usize>,
}

impl AdMapping {
    pub fn mapped_t1(&self) -> BTreeSet<usize> {
        self.pairs.iter().map(|p| p.t1).collect()
    }

    pub fn mapped_t2(&self) -> BTreeSet<usize> {
        self.pairs.iter().map(|p| p.t2).collect()
    }

    /// Track-2 partners of every mapped track-1 AD, in index order.
    pub fn partners_of_t1(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for p in &self.pairs {
            out.entry(p.t1).or_default().push(p.t2);
        }
        for v in out.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        out
    }
}

impl Validate for AdMapping {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m1 = self.mapped_t1();
        let m2 = self.mapped_t2();
        for i in &self.non_aligned_t1 {
            if m1.contains(i) {
                out.push(Violation::new(
                    format!("non_aligned_t1[{i}]"),
                    "non-aligned index appears in no pair",
                ));
            }
        }
        for j in &self.non_aligned_t2 {
            if m2.contains(j) {
                out.push(Violation::new(
                    format!("non_aligned_t2[{j}]"),
                    "non-aligned index appears in no pair",
                ));
            }
        }
        for (k, p) in self.pairs.iter().enumerate() {
            if !(p.overlap > self.threshold) || p.overlap > 1.0 {
                out.push(Violation::new(
                    format!("pairs[{k}].overlap"),
                    "overlap in (threshold, 1]",
                ));
            }
        }
        out
    }
}

/// A few-minute story unit: the evaluation granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSegment {
    pub segment_id: String,
    pub movie_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub lines: Vec<TranscriptLine>,
    #[serde(default)]
    pub plot_sentences: Vec<String>,
}

impl VideoSegment {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn ads(&self) -> impl Iterator<Item = &TranscriptLine> {
        self.lines.iter().filter(|l| l.is_ad())
    }

    pub fn dialogue(&self) -> impl Iterator<Item = &TranscriptLine> {
        self.lines.iter().filter(|l| l.is_dialogue())
    }
}

impl Validate for VideoSegment {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.segment_id.trim().is_empty() {
            out.push(Violation::new("segment_id", "segment_id non-empty"));
        }
        if !(self.end_s - self.start_s > 0.0) {
            out.push(Violation::new("end_s", "end_s - start_s > 0"));
        }
        for (pos, line) in self.lines.iter().enumerate() {
            if line.start_s < self.start_s || line.end_s > self.end_s {
                out.push(Violation::new(format!("lines[{pos}]"), "line within [start_s, end_s]"));
            }
            out.extend(prefixed(&format!("lines[{pos}]"), line.violations()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionKind {
    #[serde(rename = "VA", alias = "va")]
    Va,
    #[serde(rename = "NU", alias = "nu")]
    Nu,
}

impl QuestionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Va => "VA",
            QuestionKind::Nu => "NU",
        }
    }
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Answer option label. Only `A`..=`E` are valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OptionLabel(char);

impl OptionLabel {
    pub const ALL: [OptionLabel; 5] = [
        OptionLabel('A'),
        OptionLabel('B'),
        OptionLabel('C'),
        OptionLabel('D'),
        OptionLabel('E'),
    ];

    /// Accepts any single uppercase ASCII letter; validity is checked separately.
    pub fn new(c: char) -> Self {
        OptionLabel(c.to_ascii_uppercase())
    }

    pub fn from_position(pos: usize) -> Option<Self> {
        Self::ALL.get(pos).copied()
    }

    pub fn is_valid(self) -> bool {
        ('A'..='E').contains(&self.0)
    }

    pub fn position(self) -> Option<usize> {
        self.is_valid().then(|| (self.0 as u8 - b'A') as usize)
    }

    pub fn as_char(self) -> char {
        self.0
    }
}

impl fmt::Display for OptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<String> for OptionLabel {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => Ok(OptionLabel::new(c)),
            _ => Err(format!("invalid option label {s:?}")),
        }
    }
}

impl From<OptionLabel> for String {
    fn from(l: OptionLabel) -> Self {
        l.0.to_string()
    }
}

/// A five-option multiple-choice question with its gold answer.
///
/// Option texts never carry their label; labels are implied by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mcqa {
    pub qid: String,
    pub segment_id: String,
    pub kind: QuestionKind,
    pub question: String,
    pub options: Vec<String>,
    pub correct: OptionLabel,
    pub rationale: String,
}

impl Mcqa {
    pub fn correct_text(&self) -> Option<&str> {
        self.correct
            .position()
            .and_then(|p| self.options.get(p))
            .map(String::as_str)
    }
}

impl Validate for Mcqa {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.qid.trim().is_empty() {
            out.push(Violation::new("qid", "qid non-empty"));
        }
        if self.question.trim().is_empty() {
            out.push(Violation::new("question", "question non-empty"));
        }
        if self.options.len() != 5 {
            out.push(Violation::new("options", "exactly 5 options"));
        }
        let distinct: HashSet<String> = self.options.iter().map(|o| o.trim().to_lowercase()).collect();
        if distinct.len() != self.options.len() {
            out.push(Violation::new("options", "options distinct"));
        }
        if self.options.iter().any(|o| o.trim().is_empty()) {
            out.push(Violation::new("options", "options non-empty"));
        }
        match self.correct.position() {
            Some(p) if p < self.options.len() => {}
            _ => out.push(Violation::new("correct", "correct label indexes an existing option")),
        }
        if self.rationale.trim().is_empty() {
            out.push(Violation::new("rationale", "rationale non-empty"));
        }
        out
    }
}

/// Whether the answering model grounded its answer in the supplied context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FromContext {
    True,
    False,
    /// The run supplied no context, so the flag was not requested.
    NotApplicable,
    Unparsed,
}

impl FromContext {
    pub fn is_true(self) -> bool {
        self == FromContext::True
    }
}

/// A model's answer to one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub qid: String,
    /// `None` when the answer could not be parsed even after repair.
    pub chosen: Option<OptionLabel>,
    pub rationale: String,
    pub from_context: FromContext,
}

impl AnswerRecord {
    pub fn unparsed(qid: impl Into<String>) -> Self {
        Self {
            qid: qid.into(),
            chosen: None,
            rationale: String::new(),
            from_context: FromContext::Unparsed,
        }
    }
}

impl Validate for AnswerRecord {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Some(label) = self.chosen {
            if !label.is_valid() {
                out.push(Violation::new("chosen", "chosen label in A..E"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextType {
    #[serde(rename = "none")]
    NoContext,
    #[serde(rename = "movie-name")]
    MovieName,
    #[serde(rename = "dialog")]
    DialogOnly,
    #[serde(rename = "ad")]
    AdOnly,
    #[serde(rename = "dialog+ad")]
    DialogPlusAd,
}

impl ContextType {
    pub const ALL: [ContextType; 5] = [
        ContextType::NoContext,
        ContextType::MovieName,
        ContextType::DialogOnly,
        ContextType::AdOnly,
        ContextType::DialogPlusAd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextType::NoContext => "none",
            ContextType::MovieName => "movie-name",
            ContextType::DialogOnly => "dialog",
            ContextType::AdOnly => "ad",
            ContextType::DialogPlusAd => "dialog+ad",
        }
    }

    /// Whether the answering model is asked to flag context use.
    pub fn has_context(self) -> bool {
        !matches!(self, ContextType::NoContext | ContextType::MovieName)
    }

    pub fn needs_ads(self) -> bool {
        matches!(self, ContextType::AdOnly | ContextType::DialogPlusAd)
    }
}

impl fmt::Display for ContextType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ContextType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "none" | "no-context" | "nocontext" => Ok(ContextType::NoContext),
            "movie-name" | "movie_name" | "moviename" | "mn" => Ok(ContextType::MovieName),
            "dialog" | "dialogue" | "dialog-only" => Ok(ContextType::DialogOnly),
            "ad" | "ad-only" => Ok(ContextType::AdOnly),
            "dialog+ad" | "dialogue+ad" | "dialog-ad" => Ok(ContextType::DialogPlusAd),
            other => Err(format!(
                "unknown context type {other:?} (expected none, movie-name, dialog, ad, dialog+ad)"
            )),
        }
    }
}

/// CA/AC/CC over one subset of questions, as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindMetrics {
    pub n_questions: usize,
    pub ca: f64,
    /// Absent for runs without context.
    pub ac: Option<f64>,
    pub cc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_questions: usize,
    pub ca: f64,
    pub ac: Option<f64>,
    pub cc: Option<f64>,
    pub by_kind: BTreeMap<QuestionKind, KindMetrics>,
    pub context_type: ContextType,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub option_order: OptionOrder,
}

/// How options were ordered when shown to the answering model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionOrder {
    /// As stored with the question, never shuffled.
    #[default]
    Stored,
}

fn lattice_violations(prefix: &str, ca: f64, ac: Option<f64>, cc: Option<f64>) -> Vec<Violation> {
    let mut out = Vec::new();
    let in_range = |x: f64| (0.0..=100.0).contains(&x);
    if !in_range(ca) {
        out.push(Violation::new(format!("{prefix}ca"), "0 <= CA <= 100"));
    }
    if let (Some(ac), Some(cc)) = (ac, cc) {
        if !in_range(ac) {
            out.push(Violation::new(format!("{prefix}ac"), "0 <= AC <= 100"));
        }
        if !(cc >= 0.0 && cc <= ca.min(ac)) {
            out.push(Violation::new(format!("{prefix}cc"), "0 <= CC <= min(CA, AC)"));
        }
    } else if ac.is_some() != cc.is_some() {
        out.push(Violation::new(
            format!("{prefix}cc"),
            "AC and CC both present or both absent",
        ));
    }
    out
}

impl Validate for MetricsReport {
    fn violations(&self) -> Vec<Violation> {
        let mut out = lattice_violations("", self.ca, self.ac, self.cc);
        for (kind, m) in &self.by_kind {
            out.extend(lattice_violations(&format!("by_kind.{kind}."), m.ca, m.ac, m.cc));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedAd {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionSegment {
    pub segment_id: String,
    #[serde(default)]
    pub ads: Vec<GeneratedAd>,
}

/// Generated ADs uploaded for evaluation, grouped by video segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub method_name: String,
    #[serde(default)]
    pub segments: Vec<SubmissionSegment>,
}

impl Submission {
    pub fn ads_for(&self, segment_id: &str) -> Option<&[GeneratedAd]> {
        self.segments
            .iter()
            .find(|s| s.segment_id == segment_id)
            .map(|s| s.ads.as_slice())
    }

    pub fn total_ads(&self) -> usize {
        self.segments.iter().map(|s| s.ads.len()).sum()
    }
}

impl Validate for Submission {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.method_name.trim().is_empty() {
            out.push(Violation::new("method_name", "method_name non-empty"));
        }
        let mut seen = HashSet::new();
        for (si, seg) in self.segments.iter().enumerate() {
            if !seen.insert(seg.segment_id.as_str()) {
                out.push(Violation::new(format!("segments[{si}]"), "segment_id unique"));
            }
            for (ai, ad) in seg.ads.iter().enumerate() {
                let path = format!("segments[{si}].ads[{ai}]");
                if ad.text.trim().is_empty() {
                    out.push(Violation::new(path.clone(), "text non-empty"));
                }
                if !(ad.end_s > ad.start_s) || !ad.start_s.is_finite() || !ad.end_s.is_finite() {
                    out.push(Violation::new(path.clone(), "end_s > start_s"));
                }
            }
            for (ai, w) in seg.ads.windows(2).enumerate() {
                if w[1].start_s < w[0].start_s {
                    out.push(Violation::new(
                        format!("segments[{si}].ads[{}]", ai + 1),
                        "ads sorted by start_s",
                    ));
                }
            }
        }
        out
    }
}
