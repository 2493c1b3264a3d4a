//! Report serialization: sorted keys, floats with 17 significant digits.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};
use warped_soliton::analysis::{Residual, Status};

/// Formats a float with 17 significant digits in scientific notation.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(Number::from_str(&sig17(x)).expect("valid number")),
            _ => Value::Null,
        },
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Converts any serializable value into a normalized JSON tree.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    normalize(serde_json::to_value(x).expect("report serializes"))
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(&normalize(v.clone())).expect("report serializes");
    s.push('\n');
    s
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Skipped => "skipped",
        Status::Info => "info",
    }
}

/// Fixed-width residual listing for the text format.
pub fn residual_lines(entries: &[Residual]) -> String {
    let width = entries.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:<7}  {:>24}  {:>24}", "name", "status", "value", "at");
    for r in entries {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), sig17);
        let _ = write!(
            out,
            "{:<width$}  {:<7}  {:>24}  {:>24}",
            r.name,
            status_name(r.status),
            fmt(r.value),
            fmt(r.at)
        );
        if let Some(note) = &r.note {
            let _ = write!(out, "  ({note})");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_get_seventeen_digits_and_keys_sort() {
        let v = serde_json::json!({"b": 0.1, "a": [1, 2.5, f64::NAN], "c": 3});
        let s = to_pretty(&v);
        assert!(s.contains("1.0000000000000001e-1") || s.contains("1.0000000000000000e-1"));
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("2.5000000000000000e"));
        assert!(s.contains("null"));
        assert!(s.contains("\"c\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }
}
