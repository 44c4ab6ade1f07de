//! Versioned JSON reports, CSV tables and the output manifest.
//!
//! Everything that goes into `report.json`, the CSV tables and `manifest.json`
//! is a function of the configuration and seeds only. Wall-clock timings go to
//! `timing.json`, which the manifest does not cover.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::hexfloat;

pub const SCHEMA_VERSION: &str = "solenoid-report/1";
pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, config: &impl Serialize, result: Value) -> Result<Report> {
        Ok(Report {
            schema: SCHEMA_VERSION,
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed: None,
            rng: None,
            result,
        })
    }

    pub fn with_seed(mut self, seed: u64, rng: &str) -> Report {
        self.seed = Some(seed);
        self.rng = Some(rng.to_string());
        self
    }
}

/// `{"hex": …, "dec": …}` for a scalar that should survive a round trip.
pub fn exact(x: f64) -> Value {
    if x.is_finite() {
        json!({ "hex": hexfloat::to_hex(x), "dec": x })
    } else {
        json!({ "hex": hexfloat::to_hex(x), "dec": null })
    }
}

/// A small CSV table with an optional block of `# key=value` lines on top.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Table {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))
    }
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Collects output files in memory and writes them together.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
}

#[derive(Clone, Debug, Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    bytes: usize,
    sha256: String,
}

impl OutputSet {
    pub fn new(dir: impl AsRef<Path>) -> OutputSet {
        OutputSet { dir: dir.as_ref().to_path_buf(), files: BTreeMap::new() }
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.insert(name.to_string(), bytes);
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.files.insert(name.to_string(), table.to_bytes()?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    /// Writes every file, then `manifest.json` over them, then `timing.json`.
    pub fn write(&self, timing: &impl Serialize) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut entries = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            fs::write(self.dir.join(name), bytes)?;
            entries.push(ManifestEntry { name, bytes: bytes.len(), sha256: sha256_hex(bytes) });
        }
        let manifest = json!({ "schema": SCHEMA_VERSION, "files": entries });
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        let mut t = serde_json::to_vec_pretty(timing)?;
        t.push(b'\n');
        fs::write(self.dir.join("timing.json"), t)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
