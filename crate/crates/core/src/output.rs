// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Tables, reports and the run manifest.
//!
//! Floats are written with 17 significant digits in CSV and in shortest
//! round-trip form in JSON; `NaN` marks masked points (CSV `NaN`, JSON
//! `null`). Nothing depends on wall-clock time or thread count, so identical
//! scenarios give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::Format;

/// A rectangular table of floats with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&str]) -> Self {
        Table {
            name,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if v.is_nan() {
                    out.push_str("NaN");
                } else {
                    let _ = write!(out, "{v:.16e}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            name: &'a str,
            columns: &'a [String],
            rows: Vec<Vec<Option<f64>>>,
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.is_finite().then_some(*v)).collect())
            .collect();
        let mut s = serde_json::to_string_pretty(&Doc {
            name: self.name,
            columns: &self.columns,
            rows,
        })
        .expect("table serialises");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn file_name(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("{}.csv", self.name),
            Format::Json => format!("{}.json", self.name),
        }
    }
}

/// Structured report written as JSON regardless of the table format.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: &'static str,
    pub value: serde_json::Value,
}

impl Report {
    pub fn new(name: &'static str, value: &impl Serialize) -> Self {
        Report {
            name,
            value: to_json_value(value),
        }
    }
}

/// Serialises with non-finite floats mapped to `null`.
pub fn to_json_value(value: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

/// Provenance of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub pipeline: String,
    pub config_hash: String,
    pub format: Format,
    pub truncation: serde_json::Value,
    pub self_convergence: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders every artifact in memory; nothing touches the disk until all of
/// them exist.
pub fn render_all(tables: &[Table], reports: &[Report], format: Format) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for t in tables {
        files.push((t.file_name(format), t.render(format)));
    }
    for r in reports {
        let mut s = serde_json::to_string_pretty(&r.value).expect("report serialises");
        s.push('\n');
        files.push((format!("{}.json", r.name), s));
    }
    files
}

/// Writes `files` plus `manifest.json` into `dir` (created if needed).
pub fn write_all(dir: &Path, files: &[(String, String)], mut manifest: Manifest) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();
    manifest.files.clear();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| io_error(&path, e))?;
        manifest.files.push(FileEntry {
            name: name.clone(),
            sha256: sha256_hex(body.as_bytes()),
        });
        written.push(path);
    }
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| io_error(&path, e))?;
    written.push(path);
    Ok(written)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}
