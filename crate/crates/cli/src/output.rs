//! Output files: a `#` comment header followed by a CSV or JSON body.

use std::path::Path;

use rug::{Integer, Rational};
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn header(subcommand: &str, params: &Value, seed: Option<u64>) -> String {
    let mut h = format!("# rmtk {VERSION}\n# subcommand: {subcommand}\n# params: {params}\n");
    match seed {
        Some(s) => h.push_str(&format!("# seed: {s}\n")),
        None => h.push_str("# seed: none\n"),
    }
    h
}

fn integer_json(i: &Integer) -> Value {
    match i.to_i64() {
        Some(v) => json!(v),
        None => json!(i.to_string()),
    }
}

/// {num, den}; integers too large for i64 become decimal strings.
pub fn rational_json(r: &Rational) -> Value {
    json!({"num": integer_json(r.numer()), "den": integer_json(r.denom())})
}

pub fn rational_from_json(v: &Value) -> Option<Rational> {
    let part = |x: &Value| -> Option<Integer> {
        match x {
            Value::Number(n) => n.as_i64().map(Integer::from),
            Value::String(s) => s.parse::<Integer>().ok(),
            _ => None,
        }
    };
    let (n, d) = (part(v.get("num")?)?, part(v.get("den")?)?);
    if d == 0 {
        return None;
    }
    Some(Rational::from((n, d)))
}

/// Body of an emitted file with the comment header removed.
pub fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

pub fn parse_json(text: &str) -> serde_json::Result<Value> {
    serde_json::from_str(&body(text))
}

pub fn csv(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}
