//! Lenient extraction of structured values from free-form model output.
//!
//! Accepts strict JSON plus the near-JSON that models produce when imitating
//! example outputs: trailing commas, single-quoted strings, bare `True` /
//! `False` / `None`, and parenthesised tuples (read as arrays).

use serde_json::{Map, Number, Value};

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, pos: usize) -> Self {
        Self {
            src: text.as_bytes(),
            text,
            pos,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'/' && self.src.get(self.pos + 1) == Some(&b'/') {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn value(&mut self, depth: usize) -> Option<Value> {
        if depth > 64 {
            return None;
        }
        self.skip_ws();
        match self.peek()? {
            b'{' => self.object(depth),
            b'[' => self.sequence(b']', depth),
            b'(' => self.sequence(b')', depth),
            b'"' | b'\'' => self.string().map(Value::String),
            b'-' | b'+' | b'0'..=b'9' => self.number(),
            c if c.is_ascii_alphabetic() => {
                let word = self.identifier();
                match word {
                    "true" | "True" => Some(Value::Bool(true)),
                    "false" | "False" => Some(Value::Bool(false)),
                    "null" | "None" => Some(Value::Null),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn identifier(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.text[start..self.pos]
    }

    fn sequence(&mut self, close: u8, depth: usize) -> Option<Value> {
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek()? == close {
                self.pos += 1;
                return Some(Value::Array(items));
            }
            items.push(self.value(depth + 1)?);
            self.skip_ws();
            match self.peek()? {
                b',' => self.pos += 1,
                c if c == close => {}
                _ => return None,
            }
        }
    }

    fn object(&mut self, depth: usize) -> Option<Value> {
        self.pos += 1;
        let mut map = Map::new();
        loop {
            self.skip_ws();
            match self.peek()? {
                b'}' => {
                    self.pos += 1;
                    return Some(Value::Object(map));
                }
                b'"' | b'\'' => {
                    let key = self.string()?;
                    self.finish_entry(key, &mut map, depth)?;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let key = self.identifier().to_string();
                    self.finish_entry(key, &mut map, depth)?;
                }
                _ => return None,
            }
            self.skip_ws();
            match self.peek()? {
                b',' => self.pos += 1,
                b'}' => {}
                _ => return None,
            }
        }
    }

    fn finish_entry(&mut self, key: String, map: &mut Map<String, Value>, depth: usize) -> Option<()> {
        self.skip_ws();
        if self.peek()? != b':' {
            return None;
        }
        self.pos += 1;
        let v = self.value(depth + 1)?;
        map.insert(key, v);
        Some(())
    }

    fn string(&mut self) -> Option<String> {
        let quote = self.peek()?;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = &self.text[self.pos..];
            let mut chars = rest.chars();
            let c = chars.next()?;
            self.pos += c.len_utf8();
            match c {
                '\\' => {
                    let e = self.text[self.pos..].chars().next()?;
                    self.pos += e.len_utf8();
                    match e {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        'b' => out.push('\u{8}'),
                        'f' => out.push('\u{c}'),
                        'u' => {
                            let hex = self.text.get(self.pos..self.pos + 4)?;
                            let code = u32::from_str_radix(hex, 16).ok()?;
                            self.pos += 4;
                            if (0xD800..0xDC00).contains(&code) {
                                // surrogate pair
                                let low = self
                                    .text
                                    .get(self.pos..self.pos + 6)
                                    .filter(|s| s.starts_with("\\u"))
                                    .and_then(|s| u32::from_str_radix(&s[2..], 16).ok())?;
                                self.pos += 6;
                                let combined = 0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00);
                                out.push(char::from_u32(combined)?);
                            } else {
                                out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                            }
                        }
                        other => out.push(other),
                    }
                }
                c if c as u32 == quote as u32 => return Some(out),
                c => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Option<Value> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E' | b'-' | b'+') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = self.text[start..self.pos].trim_start_matches('+');
        if let Ok(i) = s.parse::<i64>() {
            return Some(Value::Number(i.into()));
        }
        let f: f64 = s.parse().ok()?;
        Number::from_f64(f).map(Value::Number)
    }
}

/// Parses one lenient value starting at byte offset `pos`.
fn parse_at(text: &str, pos: usize) -> Option<Value> {
    Parser::new(text, pos).value(0)
}

/// Parses the whole string as one lenient value (surrounding whitespace allowed).
pub fn parse(text: &str) -> Option<Value> {
    let mut p = Parser::new(text, 0);
    let v = p.value(0)?;
    p.skip_ws();
    (p.pos == text.len()).then_some(v)
}

/// Contents of fenced code blocks, in order.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // skip an info string such as ```json
        let body_start = after.find('\n').map(|n| n + 1).unwrap_or(0);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                out.push(body);
                break;
            }
        }
    }
    out
}

fn first_value_in(text: &str) -> Option<Value> {
    for (pos, c) in text.char_indices() {
        if c == '[' || c == '{' {
            if let Some(v) = parse_at(text, pos) {
                return Some(v);
            }
        }
    }
    None
}

/// Finds the first structured value in model output, looking inside code
/// fences first and then anywhere in the surrounding prose.
pub fn extract_first_value(text: &str) -> Option<Value> {
    for block in fenced_blocks(text) {
        if let Some(v) = parse(block.trim()).or_else(|| first_value_in(block)) {
            return Some(v);
        }
    }
    first_value_in(text)
}

/// Reads a numbered or bulleted plain-text list ("1. dialogue", "- AD").
pub fn extract_plain_list(text: &str) -> Option<Vec<String>> {
    let mut items = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("```") {
            continue;
        }
        let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
        let item = if digits > 0 {
            let rest = &line[digits..];
            let rest = rest
                .strip_prefix('.')
                .or_else(|| rest.strip_prefix(')'))
                .or_else(|| rest.strip_prefix(':'))?;
            rest.trim()
        } else if let Some(rest) = line.strip_prefix("- ").or_else(|| line.strip_prefix("* ")) {
            rest.trim()
        } else {
            continue;
        };
        let item = item
            .trim_matches(|c| c == '"' || c == '\'' || c == '`' || c == ',')
            .trim();
        if !item.is_empty() {
            items.push(item.to_string());
        }
    }
    (!items.is_empty()).then_some(items)
}
