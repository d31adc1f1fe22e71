//! Self-describing CSV and JSON reports.
//!
//! CSV reports start with `#` comment lines: the tool version, `config: <json>`, an
//! optional `host: <json>`, then one `<key>: <json>` line per summary entry.

use std::io::{BufRead, Write};
use std::path::Path;

use kronsketch::timing::HostFingerprint;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::{usage, CliResult};

const CONFIG_PREFIX: &str = "# config: ";

pub struct Report {
    pub config: RunConfig,
    pub host: Option<HostFingerprint>,
    pub summary: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(config: &RunConfig, columns: Vec<&'static str>) -> Self {
        Self { config: config.clone(), host: None, summary: Map::new(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> CliResult<()> {
        match self.config.format {
            Format::Csv => {
                writeln!(w, "# kronsketch {} {}", env!("CARGO_PKG_VERSION"), self.config.task.name())?;
                writeln!(w, "{CONFIG_PREFIX}{}", serde_json::to_string(&self.config)?)?;
                if let Some(h) = &self.host {
                    writeln!(w, "# host: {}", serde_json::to_string(h)?)?;
                }
                for (k, v) in &self.summary {
                    writeln!(w, "# {k}: {v}")?;
                }
                let mut wr = csv::Writer::from_writer(&mut w);
                wr.write_record(&self.columns)?;
                for row in &self.rows {
                    wr.write_record(row.iter().map(cell))?;
                }
                wr.flush()?;
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                let mut doc = json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "config": self.config,
                    "rows": rows,
                });
                if let Some(h) = &self.host {
                    doc["host"] = serde_json::to_value(h)?;
                }
                if !self.summary.is_empty() {
                    doc["summary"] = Value::Object(self.summary.clone());
                }
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Writes to `config.output`, or stdout.
    pub fn emit(&self) -> CliResult<()> {
        match &self.config.output {
            Some(p) => self.write(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => self.write(std::io::stdout().lock()),
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

/// Recovers the embedded configuration from a CSV or JSON report.
pub fn read_config(path: &Path) -> CliResult<RunConfig> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let text: String;
    let mut lines = file.lines();
    match lines.next().transpose()? {
        Some(first) if first.starts_with('#') => {
            for line in lines {
                let line = line?;
                if let Some(c) = line.strip_prefix(CONFIG_PREFIX) {
                    return Ok(serde_json::from_str(c)?);
                }
                if !line.starts_with('#') {
                    break;
                }
            }
            usage(format!("{} has no config line", path.display()))
        }
        Some(first) => {
            text = std::iter::once(Ok(first)).chain(lines).collect::<std::io::Result<Vec<_>>>()?.join("\n");
            let doc: Value = serde_json::from_str(&text)?;
            match doc.get("config") {
                Some(c) => Ok(serde_json::from_value(c.clone())?),
                None => usage(format!("{} has no config entry", path.display())),
            }
        }
        None => usage(format!("{} is empty", path.display())),
    }
}
