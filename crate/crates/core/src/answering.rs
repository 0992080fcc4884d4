//! Context assembly, rationale-grounded answering and CA/AC/CC scoring.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use crate::llm::{formats, template, Gateway, GatewayError, Shape, TemplateId};
use crate::model::{
    AnswerRecord, ContextType, FromContext, GeneratedAd, KindMetrics, LineKind, Mcqa, MetricsReport, OptionLabel,
    OptionOrder, QuestionKind, VideoSegment,
};

#[derive(Debug, Error)]
pub enum AnsweringError {
    #[error("context type {0} needs ADs but no AD source was given")]
    MissingAdSource(ContextType),
    #[error("answers and questions disagree on qids: {0}")]
    QidMismatch(String),
    #[error("human topline equals dialogue baseline ({0}); ratio undefined")]
    DegenerateBaseline(f64),
    #[error("unknown segment {0}")]
    UnknownSegment(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Where the ADs placed into the context come from.
#[derive(Debug, Clone, Copy)]
pub enum AdSource<'a> {
    /// The segment's own AD lines.
    Own,
    Submitted(&'a [GeneratedAd]),
    None,
}

/// Phrase substituted for the context type inside the answer prompt.
pub fn context_phrase(ctx: ContextType) -> &'static str {
    match ctx {
        ContextType::NoContext => "context",
        ContextType::MovieName => "movie name",
        ContextType::DialogOnly => "dialogues",
        ContextType::AdOnly => "audio descriptions",
        ContextType::DialogPlusAd => "dialogues and audio descriptions",
    }
}

/// Renders the context lines for one segment, in time order.
pub fn assemble_context(segment: &VideoSegment, ctx: ContextType, ads: AdSource<'_>) -> Result<String, AnsweringError> {
    match ctx {
        ContextType::NoContext => return Ok(String::new()),
        ContextType::MovieName => return Ok(segment.movie_id.clone()),
        _ => {}
    }
    let mut items: Vec<(f64, LineKind, &str)> = Vec::new();
    if matches!(ctx, ContextType::DialogOnly | ContextType::DialogPlusAd) {
        items.extend(
            segment
                .dialogue()
                .map(|l| (l.start_s, LineKind::Dialogue, l.text.as_str())),
        );
    }
    if ctx.needs_ads() {
        match ads {
            AdSource::Own => items.extend(segment.ads().map(|l| (l.start_s, LineKind::Ad, l.text.as_str()))),
            AdSource::Submitted(list) => items.extend(list.iter().map(|a| (a.start_s, LineKind::Ad, a.text.as_str()))),
            AdSource::None => return Err(AnsweringError::MissingAdSource(ctx)),
        }
    }
    // stable: at equal start times dialogue precedes AD
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(items
        .iter()
        .map(|(_, k, t)| formats::scene_line(*k, t))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Option chosen by a free-form answer such as `"B) text"`, `"B"` or the option text.
pub fn parse_choice(answer: &str, options: &[String]) -> Option<OptionLabel> {
    let a = answer.trim();
    let a = a.strip_prefix("Answer:").map(str::trim).unwrap_or(a);
    let mut chars = a.chars();
    if let Some(c) = chars.next() {
        let label = OptionLabel::new(c.to_ascii_uppercase());
        let rest = chars.next();
        if c.is_ascii_alphabetic()
            && (rest.is_none() || matches!(rest, Some(')' | '.' | ':' | ' ')))
            && label.is_valid()
            && label.position().is_some_and(|p| p < options.len())
        {
            return Some(label);
        }
    }
    options
        .iter()
        .position(|o| o.trim().eq_ignore_ascii_case(a))
        .and_then(OptionLabel::from_position)
}

fn flag_of(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) if s.trim() == "True" => Some(true),
        Value::String(s) if s.trim() == "False" => Some(false),
        _ => None,
    }
}

fn response_shape(with_flag: bool) -> Shape {
    let mut fields = vec![("answer", Shape::String), ("rationale", Shape::String)];
    if with_flag {
        fields.push((
            formats::ANSWERED_FROM_VAR,
            Shape::OneOf(vec![Shape::enumeration(["True", "False"]), Shape::Bool]),
        ));
    }
    Shape::array(Shape::object(fields))
}

fn record_from(item: &Value, q: &Mcqa, with_flag: bool) -> Option<AnswerRecord> {
    let chosen = parse_choice(item.get("answer")?.as_str()?, &q.options)?;
    let from_context = if with_flag {
        if flag_of(item.get(formats::ANSWERED_FROM_VAR)?)? {
            FromContext::True
        } else {
            FromContext::False
        }
    } else {
        FromContext::NotApplicable
    };
    Some(AnswerRecord {
        qid: q.qid.clone(),
        chosen: Some(chosen),
        rationale: item
            .get("rationale")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        from_context,
    })
}

/// Answers all `questions` (one segment) in a single prompt.
pub fn answer_questions(
    questions: &[&Mcqa],
    context: &str,
    ctx: ContextType,
    gateway: &Gateway,
) -> Result<Vec<AnswerRecord>, AnsweringError> {
    if questions.is_empty() {
        return Ok(Vec::new());
    }
    let with_flag = ctx.has_context();
    let prompt = template::render(
        TemplateId::Answer,
        &template::vars([
            ("questions_with_choices", formats::questions_with_choices(questions)),
            ("context_type", context_phrase(ctx).to_string()),
            ("answered_from_var_name", formats::ANSWERED_FROM_VAR.to_string()),
            ("context", context.to_string()),
        ]),
    )
    .map_err(GatewayError::from)?;
    let n = questions.len();
    let check = |v: &Value| {
        let items = v.as_array().map(Vec::as_slice).unwrap_or_default();
        let mut p = Vec::new();
        if items.len() != n {
            p.push(format!("expected {n} answers, one per question, got {}", items.len()));
        }
        for (k, (item, q)) in items.iter().zip(questions).enumerate() {
            let ans = item.get("answer").and_then(Value::as_str).unwrap_or_default();
            if parse_choice(ans, &q.options).is_none() {
                p.push(format!("answer {} ({ans:?}) names none of the options A-E", k + 1));
            }
        }
        p
    };
    let value = match gateway.complete_checked(&prompt, &response_shape(with_flag), &check) {
        Ok(v) => Some(v),
        Err(GatewayError::Schema { value, problems, .. }) => {
            log::warn!("answers unparsed after repair: {}", problems.join("; "));
            value
        }
        Err(e) => return Err(e.into()),
    };
    let items = value.as_ref().and_then(Value::as_array).cloned().unwrap_or_default();
    Ok(questions
        .iter()
        .enumerate()
        .map(|(k, q)| {
            items
                .get(k)
                .and_then(|item| record_from(item, q, with_flag))
                .unwrap_or_else(|| AnswerRecord::unparsed(&q.qid))
        })
        .collect())
}

/// Answers every segment's questions concurrently. `plan` picks the
/// context type and AD source per segment. Records follow `questions`.
pub fn answer_segments<'a>(
    segments: &'a [VideoSegment],
    questions: &[Mcqa],
    plan: impl Fn(&VideoSegment) -> (ContextType, AdSource<'a>) + Sync,
    gateway: &Gateway,
) -> Result<Vec<AnswerRecord>, AnsweringError> {
    let mut by_segment: BTreeMap<&str, Vec<&Mcqa>> = BTreeMap::new();
    for q in questions {
        by_segment.entry(q.segment_id.as_str()).or_default().push(q);
    }
    let seg_index: HashMap<&str, &VideoSegment> = segments.iter().map(|s| (s.segment_id.as_str(), s)).collect();
    let mut jobs = Vec::with_capacity(by_segment.len());
    for (sid, qs) in by_segment {
        let seg = *seg_index
            .get(sid)
            .ok_or_else(|| AnsweringError::UnknownSegment(sid.to_string()))?;
        jobs.push((seg, qs));
    }
    let results: Vec<Result<Vec<AnswerRecord>, AnsweringError>> = jobs
        .par_iter()
        .map(|(seg, qs)| {
            let (ctx, source) = plan(seg);
            let context = assemble_context(seg, ctx, source)?;
            answer_questions(qs, &context, ctx, gateway)
        })
        .collect();
    let mut by_qid: HashMap<String, AnswerRecord> = HashMap::new();
    for r in results {
        for rec in r? {
            by_qid.insert(rec.qid.clone(), rec);
        }
    }
    Ok(questions
        .iter()
        .map(|q| by_qid.remove(&q.qid).unwrap_or_else(|| AnswerRecord::unparsed(&q.qid)))
        .collect())
}

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64 * 100.0
    }
}

fn metrics_of(pairs: &[(&AnswerRecord, &Mcqa)], with_context: bool) -> KindMetrics {
    let n = pairs.len();
    let correct = |r: &AnswerRecord, q: &Mcqa| r.chosen == Some(q.correct);
    let ca = pairs.iter().filter(|(r, q)| correct(r, q)).count();
    let ac = pairs.iter().filter(|(r, _)| r.from_context.is_true()).count();
    let cc = pairs
        .iter()
        .filter(|(r, q)| correct(r, q) && r.from_context.is_true())
        .count();
    KindMetrics {
        n_questions: n,
        ca: pct(ca, n),
        ac: with_context.then(|| pct(ac, n)),
        cc: with_context.then(|| pct(cc, n)),
    }
}

/// CA/AC/CC overall and per question kind.
pub fn score(
    records: &[AnswerRecord],
    gold: &[Mcqa],
    ctx: ContextType,
    model: &str,
) -> Result<MetricsReport, AnsweringError> {
    let by_qid: HashMap<&str, &AnswerRecord> = records.iter().map(|r| (r.qid.as_str(), r)).collect();
    if by_qid.len() != records.len() {
        return Err(AnsweringError::QidMismatch("duplicate answer qids".into()));
    }
    let mut pairs = Vec::with_capacity(gold.len());
    let mut missing = Vec::new();
    for q in gold {
        match by_qid.get(q.qid.as_str()) {
            Some(r) => pairs.push((*r, q)),
            None => missing.push(q.qid.clone()),
        }
    }
    if !missing.is_empty() || pairs.len() != records.len() {
        let gold_ids: std::collections::HashSet<&str> = gold.iter().map(|q| q.qid.as_str()).collect();
        let extra: Vec<&str> = records
            .iter()
            .map(|r| r.qid.as_str())
            .filter(|id| !gold_ids.contains(id))
            .collect();
        return Err(AnsweringError::QidMismatch(format!(
            "missing answers {missing:?}, unknown answers {extra:?}"
        )));
    }
    let with_context = ctx.has_context();
    let overall = metrics_of(&pairs, with_context);
    let mut by_kind = BTreeMap::new();
    for kind in [QuestionKind::Va, QuestionKind::Nu] {
        let subset: Vec<_> = pairs.iter().copied().filter(|(_, q)| q.kind == kind).collect();
        if !subset.is_empty() {
            by_kind.insert(kind, metrics_of(&subset, with_context));
        }
    }
    Ok(MetricsReport {
        n_questions: overall.n_questions,
        ca: overall.ca,
        ac: overall.ac,
        cc: overall.cc,
        by_kind,
        context_type: ctx,
        model: model.to_string(),
        temperature: 0.0,
        option_order: OptionOrder::Stored,
    })
}

/// Share of the dialogue-to-human gap closed by a method, in percent.
pub fn accuracy_ratio(cc_method: f64, cc_dialog: f64, cc_human: f64) -> Result<f64, AnsweringError> {
    if cc_human == cc_dialog {
        return Err(AnsweringError::DegenerateBaseline(cc_human));
    }
    Ok(100.0 * (cc_method - cc_dialog) / (cc_human - cc_dialog))
}
