use rayon::prelude::*;
use serde_json::Value;

use super::AlignError;
use crate::llm::{formats, template, Gateway, Shape, TemplateId};
use crate::model::{LineKind, Track};

const DIALOGUE_TAG: &str = "dialogue";
const AD_TAG: &str = "AD";

fn label_shape() -> Shape {
    Shape::array(Shape::enumeration_ignore_case([DIALOGUE_TAG, AD_TAG]))
}

fn prompt_for(texts: &[&str]) -> Result<String, AlignError> {
    Ok(template::render(
        TemplateId::Classify,
        &template::vars([
            ("dialogue_tag", DIALOGUE_TAG.to_string()),
            ("ad_tag", AD_TAG.to_string()),
            ("input", formats::numbered(texts)),
        ]),
    )
    .map_err(crate::llm::GatewayError::from)?)
}

fn to_kinds(v: &Value) -> Vec<LineKind> {
    v.as_array()
        .map(|items| {
            items
                .iter()
                .map(|x| match x.as_str().map(str::trim) {
                    Some(s) if s.eq_ignore_ascii_case(AD_TAG) => LineKind::Ad,
                    _ => LineKind::Dialogue,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn classify_batch(texts: &[&str], gateway: &Gateway) -> Result<Vec<LineKind>, AlignError> {
    let n = texts.len();
    let count_check = move |v: &Value| {
        let got = v.as_array().map_or(0, Vec::len);
        if got == n {
            vec![]
        } else {
            vec![format!(
                "expected {n} classifications (one per input sentence), got {got}"
            )]
        }
    };
    match gateway.complete_checked(&prompt_for(texts)?, &label_shape(), &count_check) {
        Ok(v) => Ok(to_kinds(&v)),
        Err(e) if n > 1 => {
            log::warn!("batch of {n} lines failed ({e}); classifying line by line");
            texts
                .iter()
                .map(|t| classify_batch(&[t], gateway).map(|k| k[0]))
                .collect()
        }
        Err(e) => Err(e.into()),
    }
}

/// Labels each text as dialogue or AD, in order.
pub fn classify_texts(texts: &[&str], gateway: &Gateway, batch_size: usize) -> Result<Vec<LineKind>, AlignError> {
    let batches: Vec<&[&str]> = texts.chunks(batch_size.max(1)).collect();
    let results: Vec<Result<Vec<LineKind>, AlignError>> =
        batches.par_iter().map(|b| classify_batch(b, gateway)).collect();
    let mut out = Vec::with_capacity(texts.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Returns `track` with every line labelled AD or dialogue.
pub fn classify_lines(track: &Track, gateway: &Gateway, batch_size: usize) -> Result<Track, AlignError> {
    let texts: Vec<&str> = track.lines.iter().map(|l| l.text.as_str()).collect();
    let kinds = classify_texts(&texts, gateway, batch_size)?;
    let mut out = track.clone();
    for (line, kind) in out.lines.iter_mut().zip(kinds) {
        line.kind = kind;
    }
    Ok(out)
}
