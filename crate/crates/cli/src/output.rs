//! Self-describing output documents, rendered only once a command has
//! finished so that a failing run leaves no partial file behind.
//!
//! CSV documents start with `#` header lines; JSON-lines documents start
//! with one `{"header": {...}}` object. Headers carry the tool version, the
//! resolved configuration and the wall time; everything after the header
//! depends only on the configuration, seed and shard count.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub enum Body {
    Csv { columns: Vec<&'static str>, rows: Vec<Vec<String>> },
    JsonLines(Vec<Value>),
}

pub struct Document {
    pub command: &'static str,
    pub config: Value,
    pub body: Body,
    /// Verification failures; a nonzero count maps to exit status 1.
    pub failures: usize,
}

impl Document {
    pub fn csv(command: &'static str, config: Value, columns: Vec<&'static str>) -> Self {
        Document {
            command,
            config,
            body: Body::Csv { columns, rows: Vec::new() },
            failures: 0,
        }
    }

    pub fn json_lines(command: &'static str, config: Value) -> Self {
        Document {
            command,
            config,
            body: Body::JsonLines(Vec::new()),
            failures: 0,
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        if let Body::Csv { rows, .. } = &mut self.body {
            rows.push(row);
        }
    }

    pub fn push_record<T: Serialize>(&mut self, record: &T) {
        if let Body::JsonLines(records) = &mut self.body {
            records.push(serde_json::to_value(record).expect("records serialize"));
        }
    }

    pub fn render(&self, wall_time_s: f64) -> String {
        let mut out = String::new();
        match &self.body {
            Body::Csv { columns, rows } => {
                let _ = writeln!(out, "# ising-lab {VERSION}");
                let _ = writeln!(out, "# command: {}", self.command);
                let _ = writeln!(out, "# config: {}", self.config);
                let _ = writeln!(out, "# wall_time_s: {wall_time_s:.3}");
                out.push_str(&columns.join(","));
                out.push('\n');
                for row in rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            Body::JsonLines(records) => {
                let header = json!({ "header": {
                    "tool": "ising-lab",
                    "version": VERSION,
                    "command": self.command,
                    "config": self.config,
                    "wall_time_s": wall_time_s,
                }});
                out.push_str(&header.to_string());
                out.push('\n');
                for r in records {
                    out.push_str(&r.to_string());
                    out.push('\n');
                }
            }
        }
        out
    }
}

pub fn cell(x: f64) -> String {
    x.to_string()
}

pub fn optional_cell(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

pub fn write(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
