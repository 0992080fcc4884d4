//! Prompt templates with `{name}` placeholders.
//!
//! A placeholder is `{` + identifier + `}`. Any other brace is literal, so JSON
//! examples inside a template need no escaping; `{{` and `}}` produce a
//! literal brace when an identifier-shaped literal is wanted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("missing template variable {0:?}")]
    MissingVariable(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Classify,
    Segment,
    GenVa,
    GenNuCmd,
    GenNuMad,
    Answer,
    Repair,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::Classify,
        TemplateId::Segment,
        TemplateId::GenVa,
        TemplateId::GenNuCmd,
        TemplateId::GenNuMad,
        TemplateId::Answer,
        TemplateId::Repair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Classify => "classify",
            TemplateId::Segment => "segment",
            TemplateId::GenVa => "gen_va",
            TemplateId::GenNuCmd => "gen_nu_cmd",
            TemplateId::GenNuMad => "gen_nu_mad",
            TemplateId::Answer => "answer",
            TemplateId::Repair => "repair",
        }
    }

    fn body(self) -> &'static str {
        match self {
            TemplateId::Classify => include_str!("prompts/classify.txt"),
            TemplateId::Segment => include_str!("prompts/segment.txt"),
            TemplateId::GenVa => include_str!("prompts/gen_va.txt"),
            TemplateId::GenNuCmd => include_str!("prompts/gen_nu_cmd.txt"),
            TemplateId::GenNuMad => include_str!("prompts/gen_nu_mad.txt"),
            TemplateId::Answer => include_str!("prompts/answer.txt"),
            TemplateId::Repair => include_str!("prompts/repair.txt"),
        }
    }

    pub fn template(self) -> PromptTemplate {
        PromptTemplate::new(self.as_str(), self.body())
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pieces: Vec<Piece>,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl PromptTemplate {
    pub fn new(name: &str, body: &str) -> Self {
        let mut pieces = Vec::new();
        let mut text = String::new();
        let chars: Vec<char> = body.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '{' && chars.get(i + 1) == Some(&'{') {
                text.push('{');
                i += 2;
                continue;
            }
            if c == '}' && chars.get(i + 1) == Some(&'}') {
                text.push('}');
                i += 2;
                continue;
            }
            if c == '{' && chars.get(i + 1).copied().is_some_and(is_ident_start) {
                let mut j = i + 1;
                while j < chars.len() && is_ident(chars[j]) {
                    j += 1;
                }
                if chars.get(j) == Some(&'}') {
                    if !text.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut text)));
                    }
                    pieces.push(Piece::Var(chars[i + 1..j].iter().collect()));
                    i = j + 1;
                    continue;
                }
            }
            text.push(c);
            i += 1;
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Self {
            name: name.to_string(),
            pieces,
        }
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Var(v) => Some(v.as_str()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// Substitutes every placeholder verbatim. Values are not re-scanned.
    pub fn render<K: AsRef<str>, V: AsRef<str>>(&self, vars: &BTreeMap<K, V>) -> Result<String, TemplateError> {
        let lookup: BTreeMap<&str, &str> = vars.iter().map(|(k, v)| (k.as_ref(), v.as_ref())).collect();
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Var(name) => out.push_str(
                    lookup
                        .get(name.as_str())
                        .ok_or_else(|| TemplateError::MissingVariable(name.clone()))?,
                ),
            }
        }
        Ok(out)
    }
}

/// Renders one of the shipped templates.
pub fn render<K: AsRef<str>, V: AsRef<str>>(id: TemplateId, vars: &BTreeMap<K, V>) -> Result<String, TemplateError> {
    id.template().render(vars)
}

/// Convenience for building variable maps inline.
pub fn vars<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
