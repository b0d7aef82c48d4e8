use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Fixed 17-significant-digit rendering used in every CSV cell.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One CSV table held in memory until the run succeeds.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: Vec<String>) -> Self {
        Self {
            file,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Column names `prefix_1, …, prefix_d`.
pub fn indexed(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}_{i}")).collect()
}

#[derive(Debug, Serialize)]
pub struct ModelRef {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct OutputRef {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// Full argument vector; rerunning it reproduces every output.
    pub argv: Vec<String>,
    pub model: ModelRef,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub outputs: Vec<OutputRef>,
}

impl Manifest {
    pub fn new(subcommand: &str, model: ModelRef, parameters: serde_json::Value, seed: u64) -> Self {
        Manifest {
            tool: "horoflow",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            argv: std::env::args().collect(),
            model,
            parameters,
            seed,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs: Vec::new(),
        }
    }
}

/// Writes the tables and then the manifest that lists them.
pub fn write_run(dir: &Path, tables: &[Table], mut manifest: Manifest) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for t in tables {
        let bytes = t.to_bytes()?;
        fs::write(dir.join(t.file), &bytes)?;
        manifest.outputs.push(OutputRef {
            file: t.file.to_string(),
            sha256: sha256_hex(&bytes),
        });
    }
    let text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(dir.join("manifest.json"), text + "\n")
}
