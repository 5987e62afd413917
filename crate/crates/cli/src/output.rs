//! Data files with `#` metadata headers, and json reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::args::Format;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u8> for Cell {
    fn from(v: u8) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// One data file. `params` are the flags that regenerate it; `results` are
/// computed summaries worth keeping next to the data.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub command: String,
    pub params: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
    /// Raw header lines written verbatim after the metadata (without `# `).
    pub extra: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, command: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            command: command.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.params.push((k.into(), v.to_string()));
        self
    }

    pub fn result(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.results.push((k.into(), v.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// `autores <command> --k v ...`, unless the command is a figure.
    pub fn regenerate(&self) -> String {
        let mut s = format!("autores {}", self.command);
        if !self.command.starts_with("figure") {
            for (k, v) in &self.params {
                write!(s, " --{k}={v}").unwrap();
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# autores {VERSION}").unwrap();
        writeln!(s, "# regenerate: {}", self.regenerate()).unwrap();
        for (k, v) in &self.params {
            writeln!(s, "# param {k} = {v}").unwrap();
        }
        for (k, v) in &self.results {
            writeln!(s, "# result {k} = {v}").unwrap();
        }
        for line in &self.extra {
            writeln!(s, "# {line}").unwrap();
        }
        if !self.columns.is_empty() {
            writeln!(s, "{}", self.columns.join(",")).unwrap();
        }
        for row in &self.rows {
            writeln!(s, "{}", row.iter().map(Cell::csv).collect::<Vec<_>>().join(",")).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let pairs = |v: &[(String, String)]| v.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<Map<_, _>>();
        json!({
            "tool": "autores",
            "version": VERSION,
            "regenerate": self.regenerate(),
            "params": pairs(&self.params),
            "results": pairs(&self.results),
            "header": self.extra,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn write(&self, dir: &Path, format: Format) -> std::io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let (ext, body) = match format {
            Format::Csv => ("csv", self.to_csv()),
            Format::Json => ("json", pretty(&self.to_json())),
        };
        let path = dir.join(format!("{}.{ext}", self.name));
        fs::write(&path, body)?;
        Ok(path)
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// A json report tagged with the tool version.
pub fn report(command: &str, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("tool".into(), json!("autores"));
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(command));
    if let Value::Object(b) = body {
        m.extend(b);
    } else {
        m.insert("result".into(), body);
    }
    Value::Object(m)
}

/// Reads the `# param` and `# regenerate` lines back from a csv file.
pub fn read_header(text: &str) -> (Option<String>, Vec<(String, String)>) {
    let mut cmd = None;
    let mut params = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(c) = line.strip_prefix("# regenerate: ") {
            cmd = Some(c.to_string());
        } else if let Some(p) = line.strip_prefix("# param ") {
            if let Some((k, v)) = p.split_once(" = ") {
                params.push((k.to_string(), v.to_string()));
            }
        }
    }
    (cmd, params)
}
