// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Tabular output in CSV or JSON with a reproducibility header.
//!
//! Numbers are printed with 9 significant digits and `\n` line endings. The
//! header carries the SHA-256 digest of the table body, so identical
//! configuration and seed give byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Missing, Value::Num)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as u64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// Formats `x` with 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..9).contains(&magnitude) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // -0.000000000 and friends
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0".into()
    } else {
        s
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Num(x) => fmt_num(*x),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Missing => String::new(),
        Value::Text(t) if t.contains([',', '"', '\n']) => format!("\"{}\"", t.replace('"', "\"\"")),
        Value::Text(t) => t.clone(),
    }
}

fn json_value(v: &Value) -> serde_json::Value {
    match v {
        Value::Num(x) if x.is_finite() => {
            let rounded: f64 = fmt_num(*x).parse().expect("formatted number parses");
            serde_json::Value::from(rounded)
        }
        Value::Num(x) => serde_json::Value::String(fmt_num(*x)),
        Value::Int(i) => serde_json::Value::from(*i),
        Value::Bool(b) => serde_json::Value::Bool(*b),
        Value::Text(t) => serde_json::Value::String(t.clone()),
        Value::Missing => serde_json::Value::Null,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(schema: &'static str, schema_version: u32, columns: Vec<String>) -> Self {
        Self {
            schema,
            schema_version,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for schema {}",
            self.schema
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance fields written into every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
}

fn csv_body(t: &Table) -> String {
    let mut body = t.columns.join(",");
    body.push('\n');
    for row in &t.rows {
        let fields: Vec<String> = row.iter().map(csv_field).collect();
        body.push_str(&fields.join(","));
        body.push('\n');
    }
    body
}

fn json_rows(t: &Table) -> serde_json::Value {
    serde_json::Value::Array(
        t.rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = t
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(json_value))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect(),
    )
}

/// A rendered output file and the digest of its body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub body_sha256: String,
}

pub fn render(t: &Table, format: Format, prov: &Provenance) -> Rendered {
    match format {
        Format::Csv => {
            let body = csv_body(t);
            let digest = sha256_hex(body.as_bytes());
            let mut text = String::new();
            writeln!(text, "# coopra {TOOL_VERSION}").unwrap();
            writeln!(text, "# command: {}", prov.command).unwrap();
            writeln!(text, "# schema: {}/{}", t.schema, t.schema_version).unwrap();
            writeln!(text, "# seed: {}", prov.seed).unwrap();
            writeln!(text, "# config-sha256: {}", prov.config_sha256).unwrap();
            writeln!(text, "# body-sha256: {digest}").unwrap();
            text.push_str(&body);
            Rendered {
                text,
                body_sha256: digest,
            }
        }
        Format::Json => {
            let rows = json_rows(t);
            let body = serde_json::to_string(&rows).expect("rows serialize");
            let digest = sha256_hex(body.as_bytes());
            let doc = serde_json::json!({
                "tool": format!("coopra {TOOL_VERSION}"),
                "command": prov.command,
                "schema": format!("{}/{}", t.schema, t.schema_version),
                "seed": prov.seed,
                "config_sha256": prov.config_sha256,
                "body_sha256": digest,
                "rows": rows,
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
            text.push('\n');
            Rendered {
                text,
                body_sha256: digest,
            }
        }
    }
}

/// Written next to an output file as `<out>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub output: &'a str,
    pub output_sha256: String,
}
