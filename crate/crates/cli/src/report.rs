use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// What a command produced, before formatting.
pub struct Report {
    pub command: &'static str,
    pub result: Value,
    /// Header and rows, for commands with a tabular form.
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
}

impl Report {
    pub fn new(command: &'static str, result: impl Serialize) -> anyhow::Result<Self> {
        Ok(Self { command, result: serde_json::to_value(result)?, table: None })
    }

    pub fn with_table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.table = Some((header.iter().map(|s| s.to_string()).collect(), rows));
        self
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Envelope<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a Value,
    result: &'a Value,
}

pub fn render_json(report: &Report, config: &Value) -> anyhow::Result<String> {
    let env = Envelope { schema_version: SCHEMA_VERSION, command: report.command, config, result: &report.result };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

/// CSV rows, preceded by a `#`-comment line carrying the schema version and
/// resolved config.
pub fn render_csv(report: &Report, config: &Value) -> anyhow::Result<String> {
    let Some((header, rows)) = &report.table else {
        bail!("csv output is not available for `{}`", report.command);
    };
    let mut out = format!("# schemaVersion={SCHEMA_VERSION} config={}\n", serde_json::to_string(config)?);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    Ok(out)
}

pub fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

pub fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}
