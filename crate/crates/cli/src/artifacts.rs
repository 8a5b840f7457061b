//! Reproducibility plumbing. Every artifact embeds the resolved config and
//! the command that produced it: CSV files as a `# config: {...}` first
//! line, JSON documents as top-level `command`/`config` fields (the model
//! file keeps the same record under its `config` field). `rerun` feeds any
//! of them back through [`provenance_of_file`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

pub const HEADER_PREFIX: &str = "# config: ";
pub const SCORES_COLUMNS: &str = "index,predicted,actual,p0_mean,p1_mean,mi";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config: ExperimentConfig,
}

pub fn header_line(command: &str, cfg: &ExperimentConfig) -> String {
    let p = Provenance { command: command.into(), config: cfg.clone() };
    format!("{HEADER_PREFIX}{}", serde_json::to_string(&p).expect("config serializes"))
}

pub fn parse_header(first_line: &str) -> Result<Provenance> {
    let Some(json) = first_line.strip_prefix(HEADER_PREFIX) else {
        bail!("no reproducibility header; expected a first line starting with {HEADER_PREFIX:?}");
    };
    serde_json::from_str(json).context("parsing reproducibility header")
}

/// Write a CSV: header line, column line, then rows.
pub fn write_csv<I>(path: &Path, command: &str, cfg: &ExperimentConfig, columns: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header_line(command, cfg))?;
    writeln!(w, "{columns}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Recover (command, config) from any artifact this tool writes.
pub fn provenance_of_file(path: &Path) -> Result<Provenance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "csv") {
        let first = text.lines().next().unwrap_or("");
        return parse_header(first).with_context(|| format!("in {}", path.display()));
    }
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    // JSON artifacts carry provenance at the top level; the model document
    // nests it under "config".
    for probe in [&doc, &doc["config"]] {
        if probe.get("command").is_some_and(Value::is_string) {
            return serde_json::from_value(probe.clone())
                .with_context(|| format!("parsing provenance in {}", path.display()));
        }
    }
    bail!("{} carries no provenance record", path.display());
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    pub index: usize,
    pub predicted: usize,
    pub actual: usize,
    pub p0: f64,
    pub p1: f64,
    pub mi: f64,
}

/// Read back a scores CSV. Floats survive exactly: rows are written with
/// the shortest representation that round-trips.
pub fn read_scores(path: &Path) -> Result<(Provenance, Vec<ScoreRow>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let prov = parse_header(lines.next().unwrap_or("")).with_context(|| format!("in {}", path.display()))?;
    let columns = lines.next().unwrap_or("");
    if columns != SCORES_COLUMNS {
        bail!("{} is not a scores file: columns are {columns:?}", path.display());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("{} line {}: expected 6 fields, got {}", path.display(), i + 3, fields.len());
        }
        let parse_err = |what: &str| format!("{} line {}: bad {what}", path.display(), i + 3);
        rows.push(ScoreRow {
            index: fields[0].parse().with_context(|| parse_err("index"))?,
            predicted: fields[1].parse().with_context(|| parse_err("predicted"))?,
            actual: fields[2].parse().with_context(|| parse_err("actual"))?,
            p0: fields[3].parse().with_context(|| parse_err("p0_mean"))?,
            p1: fields[4].parse().with_context(|| parse_err("p1_mean"))?,
            mi: fields[5].parse().with_context(|| parse_err("mi"))?,
        });
    }
    Ok((prov, rows))
}
