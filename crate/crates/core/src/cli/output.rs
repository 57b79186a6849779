//! Column tables written as CSV (with `#` provenance lines) or JSON.
//!
//! Floats are printed with 17 significant digits, so every file re-parses to
//! exactly the values that were written and identical runs give identical
//! bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use super::config::{Format, RunConfig};
use super::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.names.push(name.into());
        self.columns.push(values);
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: Value,
    pub summary: Map<String, Value>,
    pub table: Table,
}

impl Report {
    pub fn new(cfg: &RunConfig, table: Table) -> Self {
        Self {
            config: cfg.to_json(),
            summary: Map::new(),
            table,
        }
    }

    pub fn note(&mut self, key: &str, value: impl serde::Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_owned(), v);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        if self.table.columns.iter().any(|c| c.len() != self.table.rows()) {
            return Err(CliError::Config("table columns differ in length".into()));
        }
        let mut out = String::new();
        out.push_str(&format!("# config {}\n", self.config));
        for (k, v) in &self.summary {
            out.push_str(&format!("# summary {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Config(format!("CSV encoding: {e}"));
        w.write_record(&self.table.names).map_err(io)?;
        for r in 0..self.table.rows() {
            w.write_record(self.table.columns.iter().map(|c| format!("{:.16e}", c[r]))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(format!("CSV encoding: {e}")))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut columns = Map::new();
        for (n, c) in self.table.names.iter().zip(&self.table.columns) {
            columns.insert(n.clone(), Value::from(c.clone()));
        }
        let mut root = Map::new();
        root.insert("config".into(), self.config.clone());
        root.insert("summary".into(), Value::Object(self.summary.clone()));
        root.insert("columns".into(), Value::Object(columns));
        serde_json::to_string_pretty(&Value::Object(root))
            .map(|s| s + "\n")
            .map_err(|e| CliError::Config(format!("JSON encoding: {e}")))
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes to `cfg.out`, or standard output.
    pub fn write(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let text = self.render(cfg.format)?;
        match &cfg.out {
            Some(path) => fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e)),
            None => std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e)),
        }
    }
}

fn parse_error(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("malformed report: {msg}"))
}

/// Parses text produced by [`Report::to_csv`].
pub fn read_csv(text: &str) -> Result<Report, CliError> {
    let mut config = Value::Null;
    let mut summary = Map::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix("# config ") {
            config = serde_json::from_str(rest).map_err(parse_error)?;
        } else if let Some(rest) = line.strip_prefix("# summary ") {
            let (k, v) = rest.split_once(" = ").ok_or_else(|| parse_error(line))?;
            summary.insert(k.to_owned(), serde_json::from_str(v).map_err(parse_error)?);
        }
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let names: Vec<String> = r.headers().map_err(parse_error)?.iter().map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for rec in r.records() {
        let rec = rec.map_err(parse_error)?;
        for (c, field) in rec.iter().enumerate() {
            columns[c].push(field.parse::<f64>().map_err(parse_error)?);
        }
    }
    Ok(Report {
        config,
        summary,
        table: Table { names, columns },
    })
}

/// Parses text produced by [`Report::to_json`].
pub fn read_json(text: &str) -> Result<Report, CliError> {
    let root: Value = serde_json::from_str(text).map_err(parse_error)?;
    let summary = root.get("summary").and_then(Value::as_object).cloned().unwrap_or_default();
    let mut table = Table::new();
    if let Some(cols) = root.get("columns").and_then(Value::as_object) {
        for (name, values) in cols {
            let vals = values
                .as_array()
                .ok_or_else(|| parse_error(name))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| parse_error(name)))
                .collect::<Result<Vec<_>, _>>()?;
            table.push(name.clone(), vals);
        }
    }
    Ok(Report {
        config: root.get("config").cloned().unwrap_or(Value::Null),
        summary,
        table,
    })
}

pub fn read_file(path: &Path) -> Result<Report, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    if text.trim_start().starts_with('{') {
        read_json(&text)
    } else {
        read_csv(&text)
    }
}
