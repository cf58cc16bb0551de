//! Writing CSV and JSON reports.

use std::io::Write;
use std::path::Path;

use modchar_core::BoundedValue;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::{CliError, CliResult};

/// Writes `content` to `path`, or to standard output for `-`.
pub fn write(path: &str, content: &str) -> CliResult<()> {
    let io = |source| CliError::Io { path: path.to_string(), source };
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(content.as_bytes()).map_err(io)?;
        out.flush().map_err(io)
    } else {
        std::fs::write(path, content).map_err(io)
    }
}

pub fn write_json(path: &str, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write(path, &text)
}

/// Where the JSON summary of a CSV-producing command goes.
pub fn summary_path(out: &str, summary: &Option<String>) -> Option<String> {
    match summary {
        Some(s) => Some(s.clone()),
        None if out == "-" => None,
        None => Some(Path::new(out).with_extension("json").to_string_lossy().into_owned()),
    }
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn bounded(v: &BoundedValue) -> Value {
    json!({ "re": v.value.re, "im": v.value.im, "abs_error": v.abs_error })
}

/// The fields every JSON report carries, merged with the command's own.
pub fn report(command: &str, f: Option<String>, window_policy: Value, heuristics: Vec<String>, body: Value) -> Value {
    let mut map = Map::new();
    map.insert("tool_version".into(), json!(modchar_core::TOOL_VERSION));
    map.insert("command".into(), json!(command));
    map.insert("f".into(), json!(f));
    map.insert("window_policy".into(), window_policy);
    map.insert("heuristics".into(), json!(heuristics));
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Value::Object(map)
}

/// A small CSV builder; every float goes through [`crate::parse::fmt_f`].
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv { text: format!("{}\n", header.join(",")) }
    }

    /// Starts with `# key=value` metadata lines before the header.
    pub fn with_meta(meta: &[(&str, String)], header: &[&str]) -> Csv {
        let mut text = String::new();
        for (k, v) in meta {
            text.push_str(&format!("# {k}={v}\n"));
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
