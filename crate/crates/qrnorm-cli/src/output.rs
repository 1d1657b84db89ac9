//! Rendering of command results as JSON, CSV or text.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Shortest decimal form of `v` rounded to 12 significant digits.
pub fn num12(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(v);
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn round12(v: f64) -> f64 {
    if v.abs() < 5e-16 {
        return 0.0;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Rounds every number in a JSON tree to 12 significant digits; non-finite values become strings.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    *v = serde_json::Number::from_f64(round12(f)).map(Value::Number).unwrap_or(Value::String(num12(f)));
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Replaces non-finite floats before they reach serde_json, which would emit null.
pub fn finite_or_str(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::String(num12(v))
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map(num12).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows of a record for CSV and text: a top-level array of objects becomes a
/// table, anything else becomes key/value pairs.
fn rows_of(v: &Value) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let arr = v.as_array()?;
    let mut cols: Vec<String> = Vec::new();
    for item in arr {
        for k in item.as_object()?.keys() {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    let rows = arr.iter().map(|item| cols.iter().map(|c| item.get(c).map(scalar).unwrap_or_default()).collect()).collect();
    Some((cols, rows))
}

pub fn render(v: &Value, fmt: Format) -> String {
    let mut v = v.clone();
    round_json(&mut v);
    match fmt {
        Format::Json => serde_json::to_string_pretty(&v).expect("json") + "\n",
        Format::Csv => {
            let mut out = String::new();
            let table = v.get("rows").and_then(rows_of).or_else(|| rows_of(&v));
            if let Some((cols, rows)) = table {
                let _ = writeln!(out, "{}", cols.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
                for r in rows {
                    let _ = writeln!(out, "{}", r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
                }
            } else if let Some(o) = v.as_object() {
                out.push_str("key,value\n");
                for (k, x) in o {
                    let _ = writeln!(out, "{},{}", csv_field(k), csv_field(&scalar(x)));
                }
            } else {
                let _ = writeln!(out, "{}", scalar(&v));
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            text_into(&mut out, &v, 0);
            out
        }
    }
}

fn text_into(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(o) => text_object(out, o, indent),
        Value::Array(a) => {
            for item in a {
                if let Some(line) = flat_line(item) {
                    let _ = writeln!(out, "{pad}- {line}");
                } else if item.is_object() {
                    let _ = writeln!(out, "{pad}-");
                    text_into(out, item, indent + 1);
                } else {
                    let _ = writeln!(out, "{pad}- {}", scalar(item));
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", scalar(other));
        }
    }
}

fn text_object(out: &mut String, o: &Map<String, Value>, indent: usize) {
    let pad = "  ".repeat(indent);
    for (k, x) in o {
        match x {
            Value::Object(_) | Value::Array(_) if !is_flat_array(x) => {
                let _ = writeln!(out, "{pad}{k}:");
                text_into(out, x, indent + 1);
            }
            Value::Array(a) => {
                let _ = writeln!(out, "{pad}{k}: [{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", "));
            }
            _ => {
                let _ = writeln!(out, "{pad}{k}: {}", scalar(x));
            }
        }
    }
}

/// `k=v` pairs for an object whose values are all scalars.
fn flat_line(v: &Value) -> Option<String> {
    let o = v.as_object()?;
    if o.values().any(|x| x.is_object() || x.is_array()) {
        return None;
    }
    Some(o.iter().map(|(k, x)| format!("{k}={}", scalar(x))).collect::<Vec<_>>().join(" "))
}

fn is_flat_array(v: &Value) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(|x| !x.is_object() && !x.is_array()))
}
