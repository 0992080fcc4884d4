//! Multiple-choice question generation from ADs (VA) and plot text (NU).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::{mcqa_from_qa_record, QaRecord};
use crate::llm::{formats, template, Gateway, GatewayError, Shape, TemplateId};
use crate::model::{Mcqa, QuestionKind, Validate, VideoSegment, Violation};
use crate::text::tokenize;

pub const VA_RATIONALE_PREFIX: &str = "As specified in the audio description";

#[derive(Debug, Error)]
pub enum QaGenError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Which NU prompt to use: one-line clip descriptions or plot summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NuStyle {
    Description,
    #[default]
    Summary,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generated {
    pub questions: Vec<Mcqa>,
    pub warnings: Vec<String>,
}

fn response_shape() -> Shape {
    let item = Shape::object([
        ("question", Shape::String),
        ("options", Shape::array(Shape::String)),
        ("correct_answer", Shape::String),
        ("rationale", Shape::String),
    ]);
    // an empty object stands for "no good questions"
    Shape::OneOf(vec![Shape::array(item), Shape::object::<String>([])])
}

fn qid(segment_id: &str, kind: QuestionKind, k: usize) -> String {
    let tag = match kind {
        QuestionKind::Va => "va",
        QuestionKind::Nu => "nu",
    };
    format!("{segment_id}-{tag}-{:02}", k + 1)
}

fn text_field(v: &Value, key: &str) -> String {
    v.get(key)
        .and_then(Value::as_str)
        .unwrap_or_default()
        .trim()
        .to_string()
}

/// Converts model output into questions, dropping invalid ones.
fn collect(value: &Value, segment_id: &str, kind: QuestionKind) -> Generated {
    let mut out = Generated::default();
    let mut candidates = Vec::new();
    for (pos, item) in value.as_array().into_iter().flatten().enumerate() {
        let record = QaRecord {
            qid: qid(segment_id, kind, pos),
            segment_id: segment_id.to_string(),
            kind,
            question: text_field(item, "question"),
            options: item
                .get("options")
                .and_then(Value::as_array)
                .map(|a| a.iter().map(|o| o.as_str().unwrap_or_default().to_string()).collect())
                .unwrap_or_default(),
            correct_answer: text_field(item, "correct_answer"),
            rationale: text_field(item, "rationale"),
        };
        match mcqa_from_qa_record(record) {
            Ok(q) => match question_violations(&q).first() {
                Some(v) => out
                    .warnings
                    .push(format!("{segment_id} question {}: dropped ({v})", pos + 1)),
                None => candidates.push(q),
            },
            Err(e) => out
                .warnings
                .push(format!("{segment_id} question {}: dropped ({e})", pos + 1)),
        }
    }
    let leaks = leaking(&candidates);
    for (k, q) in candidates.into_iter().enumerate() {
        if leaks.contains(&k) {
            out.warnings
                .push(format!("{}: dropped (stem reveals another answer)", q.qid));
        } else {
            out.questions.push(q);
        }
    }
    for (k, q) in out.questions.iter_mut().enumerate() {
        q.qid = qid(segment_id, kind, k);
    }
    out
}

fn question_violations(q: &Mcqa) -> Vec<Violation> {
    let mut v = q.violations();
    if q.kind == QuestionKind::Va && !q.rationale.starts_with(VA_RATIONALE_PREFIX) {
        v.push(Violation::new(
            "rationale",
            format!("VA rationale starts with {VA_RATIONALE_PREFIX:?}"),
        ));
    }
    v
}

fn contains_tokens(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

/// Positions of questions whose stem contains another question's correct
/// option text as a contiguous token run.
fn leaking(questions: &[Mcqa]) -> Vec<usize> {
    let stems: Vec<Vec<String>> = questions.iter().map(|q| tokenize(&q.question)).collect();
    let answers: Vec<Vec<String>> = questions
        .iter()
        .map(|q| tokenize(q.correct_text().unwrap_or_default()))
        .collect();
    (0..questions.len())
        .filter(|&j| (0..questions.len()).any(|i| i != j && contains_tokens(&stems[j], &answers[i])))
        .collect()
}

/// Per-question rules plus the cross-question leakage check.
pub fn validate_question_set(questions: &[Mcqa]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (k, q) in questions.iter().enumerate() {
        for v in question_violations(q) {
            out.push(Violation::new(format!("[{k}].{}", v.path), v.rule));
        }
    }
    for j in leaking(questions) {
        out.push(Violation::new(
            format!("[{j}].question"),
            "stem does not contain another question's correct answer",
        ));
    }
    out
}

fn run(prompt: &str, segment_id: &str, kind: QuestionKind, gateway: &Gateway) -> Result<Generated, QaGenError> {
    let value = gateway.complete(prompt, &response_shape())?;
    Ok(collect(&value, segment_id, kind))
}

/// Visual-appreciation questions from the segment's ADs.
pub fn generate_va(segment: &VideoSegment, gateway: &Gateway) -> Result<Generated, QaGenError> {
    if segment.ads().next().is_none() {
        return Ok(Generated::default());
    }
    let scene: Vec<String> = segment
        .lines
        .iter()
        .map(|l| formats::scene_line(l.kind, &l.text))
        .collect();
    let prompt = template::render(TemplateId::GenVa, &template::vars([("scene", scene.join("\n"))]))
        .map_err(GatewayError::from)?;
    run(&prompt, &segment.segment_id, QuestionKind::Va, gateway)
}

/// Narrative-understanding questions from the segment's plot sentences.
pub fn generate_nu(segment: &VideoSegment, style: NuStyle, gateway: &Gateway) -> Result<Generated, QaGenError> {
    if segment.plot_sentences.iter().all(|s| s.trim().is_empty()) {
        return Ok(Generated::default());
    }
    let text = segment.plot_sentences.join(" ");
    let prompt = match style {
        NuStyle::Description => template::render(TemplateId::GenNuCmd, &template::vars([("description", text)])),
        NuStyle::Summary => template::render(TemplateId::GenNuMad, &template::vars([("summary", text)])),
    }
    .map_err(GatewayError::from)?;
    run(&prompt, &segment.segment_id, QuestionKind::Nu, gateway)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KindSelection {
    Va,
    Nu,
    #[default]
    Both,
}

impl std::str::FromStr for KindSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "va" => Ok(Self::Va),
            "nu" => Ok(Self::Nu),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown question kind {other:?} (va, nu or both)")),
        }
    }
}

/// Generates questions for many segments concurrently, in segment order.
pub fn generate_all(
    segments: &[VideoSegment],
    kinds: KindSelection,
    style: NuStyle,
    gateway: &Gateway,
) -> Result<Generated, QaGenError> {
    let per: Vec<Result<Generated, QaGenError>> = segments
        .par_iter()
        .map(|seg| {
            let mut g = Generated::default();
            for part in [
                (kinds != KindSelection::Nu).then(|| generate_va(seg, gateway)),
                (kinds != KindSelection::Va).then(|| generate_nu(seg, style, gateway)),
            ]
            .into_iter()
            .flatten()
            {
                let part = part?;
                g.questions.extend(part.questions);
                g.warnings.extend(part.warnings);
            }
            Ok(g)
        })
        .collect();
    let mut out = Generated::default();
    for g in per {
        let g = g?;
        out.questions.extend(g.questions);
        out.warnings.extend(g.warnings);
    }
    Ok(out)
}
