//! `key = value` run files and the resolved-configuration echo.

use std::ffi::OsString;
use std::path::Path;

use anyhow::Context;
use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, CommandFactory};
use sha2::{Digest, Sha256};

use crate::{input_error, Cli};

/// Options that take a value and may precede the subcommand.
const GLOBAL_VALUED: [&str; 3] = ["--config", "--output", "-o"];

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> anyhow::Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(input_error(format!(
                "config line {}: expected `key = value`, got `{raw}`",
                i + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        let value = v.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(input_error(format!(
                "config line {}: empty key or value",
                i + 1
            )));
        }
        if out.iter().any(|e: &Entry| e.key == key) {
            return Err(input_error(format!(
                "config line {}: `{key}` set twice",
                i + 1
            )));
        }
        out.push(Entry {
            key,
            value,
            line: i + 1,
        });
    }
    Ok(out)
}

fn subcommand_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&a.as_ref()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Splices the file's settings in right after the subcommand, so that flags
/// given on the command line override them.
pub fn merge(argv: &[OsString], path: &Path) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse(&text).with_context(|| format!("in {}", path.display()))?;
    let idx = subcommand_index(argv).ok_or_else(|| input_error("no subcommand given"))?;
    let name = argv[idx].to_string_lossy().to_string();
    let cmd = Cli::command();
    let sub = cmd
        .find_subcommand(&name)
        .ok_or_else(|| input_error(format!("unknown subcommand `{name}`")))?;
    let mut spliced = Vec::new();
    for e in &entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && !a.is_global_set())
            .filter(|a| !matches!(a.get_action(), ArgAction::Help | ArgAction::Version))
            .ok_or_else(|| {
                input_error(format!(
                    "{}: line {}: unknown key `{}` for `{name}`",
                    path.display(),
                    e.line,
                    e.key
                ))
            })?;
        match arg.get_action() {
            ArgAction::SetTrue => match e.value.as_str() {
                "true" => spliced.push(OsString::from(format!("--{}", e.key))),
                "false" => {}
                v => {
                    return Err(input_error(format!(
                        "{}: line {}: `{}` takes true or false, got `{v}`",
                        path.display(),
                        e.line,
                        e.key
                    )))
                }
            },
            _ => {
                spliced.push(OsString::from(format!("--{}", e.key)));
                spliced.push(OsString::from(&e.value));
            }
        }
    }
    let mut out: Vec<OsString> = argv[..=idx].to_vec();
    out.extend(spliced);
    out.extend(argv[idx + 1..].iter().cloned());
    Ok(out)
}

/// Every argument value the command ran with, defaults included.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: String,
    pub entries: Vec<(String, String)>,
}

impl Resolved {
    pub fn from_matches(command: &str, m: &ArgMatches) -> Self {
        let cmd = Cli::command();
        let args: Vec<String> = cmd
            .find_subcommand(command)
            .map(|s| s.get_arguments().map(|a| a.get_id().to_string()).collect())
            .unwrap_or_default();
        let mut entries = Vec::new();
        for id in m.ids() {
            let id = id.as_str();
            // Flattened argument structs show up as groups; skip them.
            if !args.iter().any(|a| a == id) || matches!(id, "config" | "output") {
                continue;
            }
            if m.value_source(id) == Some(ValueSource::DefaultValue) && is_false(m, id) {
                continue;
            }
            let Ok(Some(raw)) = m.try_get_raw(id) else {
                continue;
            };
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().to_string()).collect();
            if vals.is_empty() {
                continue;
            }
            entries.push((id.replace('_', "-"), vals.join(",")));
        }
        entries.sort();
        Resolved {
            command: command.to_string(),
            entries,
        }
    }

    pub fn canonical(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        serde_json::Value::Object(map)
    }
}

fn is_false(m: &ArgMatches, id: &str) -> bool {
    matches!(m.try_get_one::<bool>(id), Ok(Some(false)))
}
