//! CSV and JSON documents carrying the resolved configuration.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};

use crate::config::Resolved;

pub const CONVENTIONS: &str = "variances in zero-point units (ground state = 1); \
     angular frequencies in rad/s unless suffixed _hz; F(w) = integral of f(t) exp(i w t) dt";

pub struct Destination {
    path: Option<PathBuf>,
}

impl Destination {
    pub fn new(path: Option<&Path>) -> Self {
        Destination {
            path: path.map(Path::to_path_buf),
        }
    }

    pub fn write(&self, text: &str) -> anyhow::Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, text)
                .map_err(|e| crate::input_error(format!("cannot write {}: {e}", p.display()))),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .context("writing to stdout")
            }
        }
    }
}

/// Shortest round-trip scientific form.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// A CSV table preceded by `#` metadata lines.
pub struct CsvDoc {
    meta: Vec<(String, String)>,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(resolved: &Resolved, header: &[&str]) -> anyhow::Result<Self> {
        let mut meta = vec![
            ("command".to_string(), resolved.command.clone()),
            ("config_sha256".to_string(), resolved.sha256()),
        ];
        for (k, v) in &resolved.entries {
            meta.push((format!("config.{k}"), v.clone()));
        }
        meta.push(("conventions".to_string(), CONVENTIONS.to_string()));
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(CsvDoc { meta, writer })
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn row<I, S>(&mut self, fields: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn nums(&mut self, fields: &[f64]) -> anyhow::Result<()> {
        self.row(fields.iter().map(|&v| num(v)))
    }

    pub fn finish(self) -> anyhow::Result<String> {
        let body = self.writer.into_inner().map_err(|e| e.into_error())?;
        let mut s = String::new();
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s.push_str(std::str::from_utf8(&body)?);
        Ok(s)
    }
}

/// `body` with `command`, `config` and `config_sha256` prepended.
pub fn json_doc(resolved: &Resolved, body: Value) -> anyhow::Result<String> {
    let mut doc = json!({
        "command": resolved.command,
        "config": resolved.to_json(),
        "config_sha256": resolved.sha256(),
        "conventions": CONVENTIONS,
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}
