//! Text layouts substituted into prompt placeholders, and their inverses.
//!
//! The inverses let the synthetic mock read prompts back; production code
//! only renders.

use crate::model::{LineKind, Mcqa, OptionLabel, TranscriptLine};
use crate::text::format_timestamp;

/// `1. first\n2. second`
pub fn numbered<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref().trim()))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn kind_prefix(kind: LineKind) -> &'static str {
    match kind {
        LineKind::Ad => "Audio Description",
        LineKind::Dialogue => "Dialogue",
        LineKind::Unclassified => "Sentence",
    }
}

pub fn scene_line(kind: LineKind, text: &str) -> String {
    format!("{}: {}", kind_prefix(kind), text.trim())
}

/// Script layout used for scene segmentation: 1-based line numbers.
pub fn script(lines: &[TranscriptLine]) -> String {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            format!(
                "Line {}\n{} --> {}\n{}",
                i + 1,
                format_timestamp(l.start_s),
                format_timestamp(l.end_s),
                scene_line(l.kind, &l.text)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Questions with labelled options, one block per question.
pub fn questions_with_choices(questions: &[&Mcqa]) -> String {
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut block = format!("Question {}: {}", i + 1, q.question.trim());
            for (pos, opt) in q.options.iter().enumerate() {
                let label = OptionLabel::from_position(pos)
                    .map(|l| l.to_string())
                    .unwrap_or_default();
                block.push_str(&format!("\n{label}) {}", opt.trim()));
            }
            block
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Variable name used for the grounding flag in answer prompts.
pub const ANSWERED_FROM_VAR: &str = "answered_from_context";

// ---------------------------------------------------------------------------
// Inverses

/// Items of a `numbered` list following `marker` (or the whole text).
pub fn parse_numbered_after(text: &str, marker: &str) -> Vec<String> {
    let body = text.rfind(marker).map(|p| &text[p + marker.len()..]).unwrap_or(text);
    let mut out: Vec<String> = Vec::new();
    for line in body.lines() {
        let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            if let Some(rest) = line[digits..].strip_prefix(". ") {
                out.push(rest.to_string());
            }
        }
    }
    out
}

/// `(kind, text)` of every scene line in `text`.
pub fn parse_scene_lines(text: &str) -> Vec<(LineKind, String)> {
    text.lines()
        .filter_map(|l| {
            let l = l.trim();
            if let Some(t) = l.strip_prefix("Audio Description: ") {
                Some((LineKind::Ad, t.to_string()))
            } else if let Some(t) = l.strip_prefix("Dialogue: ") {
                Some((LineKind::Dialogue, t.to_string()))
            } else {
                l.strip_prefix("Sentence: ")
                    .map(|t| (LineKind::Unclassified, t.to_string()))
            }
        })
        .collect()
}

/// Number of `Line N` headers in a script.
pub fn count_script_lines(text: &str) -> usize {
    text.lines()
        .filter(|l| {
            l.strip_prefix("Line ")
                .is_some_and(|n| !n.is_empty() && n.trim().chars().all(|c| c.is_ascii_digit()))
        })
        .count()
}

/// A question block parsed back from `questions_with_choices`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionBlock {
    pub question: String,
    pub options: Vec<String>,
}

pub fn parse_questions(text: &str) -> Vec<QuestionBlock> {
    let mut out: Vec<QuestionBlock> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("Question ") {
            if let Some((num, q)) = rest.split_once(": ") {
                if num.chars().all(|c| c.is_ascii_digit()) {
                    out.push(QuestionBlock {
                        question: q.to_string(),
                        options: Vec::new(),
                    });
                    continue;
                }
            }
        }
        if let Some(block) = out.last_mut() {
            let mut chars = line.chars();
            if let (Some(c), Some(')')) = (chars.next(), chars.next()) {
                if ('A'..='E').contains(&c) && block.options.len() < 5 {
                    block.options.push(line[2..].trim().to_string());
                }
            }
        }
    }
    out
}
