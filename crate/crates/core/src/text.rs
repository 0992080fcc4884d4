//! Tokenization and sentence helpers shared by alignment, CIDEr and parsing.

use std::collections::BTreeSet;

/// Lowercased tokens with punctuation removed.
///
/// Punctuation inside a word is dropped ("don't" -> "dont"); anything that is
/// not alphanumeric or whitespace counts as punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter_map(|c| {
            if c.is_alphanumeric() {
                Some(c.to_lowercase().collect::<String>())
            } else if c.is_whitespace() {
                Some(" ".to_string())
            } else {
                None
            }
        })
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

/// Token-set Jaccard similarity; 0 when both sides are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

pub fn text_jaccard(a: &str, b: &str) -> f64 {
    jaccard(&token_set(a), &token_set(b))
}

const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "st.", "jr.", "sr.", "prof.", "vs.", "etc.", "e.g.", "i.e.", "no.",
];

/// Splits a paragraph into sentences on `.`, `!` or `?` followed by
/// whitespace, keeping common title abbreviations ("Mr.", "Dr.") intact.
pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = paragraph.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        current.push(c);
        if matches!(c, '.' | '!' | '?') {
            // absorb closing quotes/brackets and repeated terminators
            while i + 1 < chars.len() && matches!(chars[i + 1], '"' | '\'' | ')' | '”' | '’' | '.' | '!' | '?') {
                i += 1;
                current.push(chars[i]);
            }
            let at_break = i + 1 >= chars.len() || chars[i + 1].is_whitespace();
            if at_break && !ends_with_abbreviation(&current) {
                let s = current.trim();
                if !s.is_empty() {
                    out.push(s.to_string());
                }
                current.clear();
            }
        }
        i += 1;
    }
    let rest = current.trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

fn ends_with_abbreviation(s: &str) -> bool {
    let last = s.split_whitespace().last().unwrap_or("").to_lowercase();
    ABBREVIATIONS.contains(&last.as_str())
}

/// Formats seconds as `hh:mm:ss.ss`.
pub fn format_timestamp(seconds: f64) -> String {
    let total = seconds.max(0.0);
    let hours = (total / 3600.0).floor();
    let minutes = ((total - hours * 3600.0) / 60.0).floor();
    let secs = total - hours * 3600.0 - minutes * 60.0;
    format!("{:02}:{:02}:{:05.2}", hours as u64, minutes as u64, secs)
}
