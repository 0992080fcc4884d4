//! Declarative description of the structure a model response must have.

use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Any,
    String,
    Number,
    Integer,
    Bool,
    Null,
    /// One of a fixed set of strings.
    Enum {
        values: Vec<String>,
        case_sensitive: bool,
    },
    Array {
        items: Box<Shape>,
        len: Option<usize>,
    },
    /// Required keys with their shapes; extra keys are allowed.
    Object {
        required: Vec<(String, Shape)>,
    },
    /// Fixed-arity heterogeneous array.
    Tuple(Vec<Shape>),
    OneOf(Vec<Shape>),
}

impl Shape {
    pub fn array(items: Shape) -> Self {
        Shape::Array {
            items: Box::new(items),
            len: None,
        }
    }

    pub fn array_of_len(items: Shape, len: usize) -> Self {
        Shape::Array {
            items: Box::new(items),
            len: Some(len),
        }
    }

    pub fn object<K: Into<String>>(fields: impl IntoIterator<Item = (K, Shape)>) -> Self {
        Shape::Object {
            required: fields.into_iter().map(|(k, s)| (k.into(), s)).collect(),
        }
    }

    pub fn enumeration<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Self {
        Shape::Enum {
            values: values.into_iter().map(Into::into).collect(),
            case_sensitive: true,
        }
    }

    pub fn enumeration_ignore_case<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Self {
        Shape::Enum {
            values: values.into_iter().map(Into::into).collect(),
            case_sensitive: false,
        }
    }

    pub fn nullable(inner: Shape) -> Self {
        Shape::OneOf(vec![inner, Shape::Null])
    }

    /// Whether a plain-text list could stand in for this shape.
    pub(crate) fn accepts_plain_list(&self) -> bool {
        matches!(self, Shape::Array { items, .. } if matches!(**items, Shape::String | Shape::Enum { .. }))
    }

    /// Every mismatch between `value` and this shape, as `path: problem`.
    pub fn check(&self, value: &Value) -> Vec<String> {
        let mut out = Vec::new();
        self.check_into(value, "$", &mut out);
        out
    }

    fn check_into(&self, value: &Value, path: &str, out: &mut Vec<String>) {
        match (self, value) {
            (Shape::Any, _) => {}
            (Shape::String, Value::String(_)) => {}
            (Shape::Number, Value::Number(_)) => {}
            (Shape::Integer, Value::Number(n)) if n.is_i64() || n.is_u64() => {}
            (Shape::Bool, Value::Bool(_)) => {}
            (Shape::Null, Value::Null) => {}
            (Shape::Enum { values, case_sensitive }, Value::String(s)) => {
                let s = s.trim();
                let ok = values.iter().any(|v| {
                    if *case_sensitive {
                        v == s
                    } else {
                        v.eq_ignore_ascii_case(s)
                    }
                });
                if !ok {
                    out.push(format!("{path}: {s:?} is not one of {values:?}"));
                }
            }
            (Shape::Array { items, len }, Value::Array(arr)) => {
                if let Some(n) = len {
                    if arr.len() != *n {
                        out.push(format!("{path}: expected {n} items, got {}", arr.len()));
                    }
                }
                for (i, v) in arr.iter().enumerate() {
                    items.check_into(v, &format!("{path}[{i}]"), out);
                }
            }
            (Shape::Object { required }, Value::Object(map)) => {
                for (key, shape) in required {
                    match map.get(key) {
                        Some(v) => shape.check_into(v, &format!("{path}.{key}"), out),
                        None => out.push(format!("{path}: missing key {key:?}")),
                    }
                }
            }
            (Shape::Tuple(shapes), Value::Array(arr)) => {
                if arr.len() != shapes.len() {
                    out.push(format!("{path}: expected {} elements, got {}", shapes.len(), arr.len()));
                }
                for (i, (s, v)) in shapes.iter().zip(arr).enumerate() {
                    s.check_into(v, &format!("{path}[{i}]"), out);
                }
            }
            (Shape::OneOf(options), v) => {
                let mut best: Option<Vec<String>> = None;
                for s in options {
                    let errs = s.check(v);
                    if errs.is_empty() {
                        return;
                    }
                    if best.as_ref().is_none_or(|b| errs.len() < b.len()) {
                        best = Some(errs);
                    }
                }
                out.push(format!(
                    "{path}: matches none of the allowed forms ({})",
                    best.unwrap_or_default().join("; ")
                ));
            }
            (shape, v) => out.push(format!("{path}: expected {}, got {}", shape.name(), type_name(v))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Shape::Any => "anything",
            Shape::String => "string",
            Shape::Number => "number",
            Shape::Integer => "integer",
            Shape::Bool => "boolean",
            Shape::Null => "null",
            Shape::Enum { .. } => "enumerated string",
            Shape::Array { .. } | Shape::Tuple(_) => "array",
            Shape::Object { .. } => "object",
            Shape::OneOf(_) => "one of several forms",
        }
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn array_length_and_enum() {
        let s = Shape::array_of_len(Shape::enumeration(["dialogue", "AD"]), 2);
        assert!(s.check(&json!(["dialogue", "AD"])).is_empty());
        let errs = s.check(&json!(["dialogue"]));
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("expected 2 items"));
        assert_eq!(s.check(&json!(["Dialogue", "AD"])).len(), 1);
        let lenient = Shape::array(Shape::enumeration_ignore_case(["dialogue", "AD"]));
        assert!(lenient.check(&json!(["Dialogue", "ad"])).is_empty());
    }

    #[test]
    fn objects_and_tuples() {
        let s = Shape::array(Shape::object([("answer", Shape::String), ("ok", Shape::Bool)]));
        let errs = s.check(&json!([{"answer": "A"}, {"answer": 3, "ok": true}]));
        assert_eq!(errs.len(), 2, "{errs:?}");
        let t = Shape::Tuple(vec![Shape::Integer, Shape::Integer, Shape::nullable(Shape::String)]);
        assert!(t.check(&json!([1, 2, null])).is_empty());
        assert!(t.check(&json!([1, 2, "x"])).is_empty());
        assert!(!t.check(&json!([1, 2.5, 3])).is_empty());
    }

    #[test]
    fn type_mismatch_message() {
        let errs = Shape::String.check(&json!(1));
        assert_eq!(errs, vec!["$: expected string, got number".to_string()]);
    }
}
