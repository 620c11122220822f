//! CSV tables and the JSON sidecar.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{Experiment, SCHEMA_VERSION};

/// Twelve significant digits, so reruns are byte-identical and diffable.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// One-based file list joined by `;`.
pub fn files(set: &[usize]) -> String {
    set.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// A table whose first column is the config hash.
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        let mut header = vec!["config_hash"];
        header.extend_from_slice(columns);
        Self { name, header, rows: Vec::new() }
    }

    pub fn push(&mut self, hash: &str, fields: Vec<String>) {
        debug_assert_eq!(fields.len() + 1, self.header.len(), "row width of {}", self.name);
        let mut row = vec![hash.to_string()];
        row.extend(fields);
        self.rows.push(row);
    }

    fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema_version: u32,
    tool_version: &'static str,
    mode: String,
    config_hash: String,
    sim_seed: u64,
    opt_seed: u64,
    files: Vec<FileInfo>,
    config: &'a Experiment,
}

#[derive(Serialize)]
struct FileInfo {
    name: String,
    rows: usize,
    columns: Vec<&'static str>,
}

/// Writes every table plus `<mode>.meta.json` into the experiment's output
/// directory and returns the paths written.
pub fn write_all(exp: &Experiment, tables: &[Table]) -> Result<Vec<PathBuf>> {
    let dir = &exp.output_path;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = tables.iter().map(|t| t.write(dir)).collect::<Result<Vec<_>>>()?;
    let meta = Sidecar {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        mode: exp.mode.to_string(),
        config_hash: exp.hash(),
        sim_seed: exp.sim.seed,
        opt_seed: exp.opt.seed,
        files: tables.iter().map(|t| FileInfo { name: t.file_name(), rows: t.rows.len(), columns: t.header.clone() }).collect(),
        config: exp,
    };
    let path = dir.join(format!("{}.meta.json", exp.mode));
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    written.push(path);
    Ok(written)
}
