//! Result files, their digests and the per-run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CSV_SCHEMA: &str = "1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// 17 significant digits, so every `f64` round-trips.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        // Adding zero folds -0 into +0.
        format!("{:.16e}", x + 0.0)
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    /// Data rows, excluding the header; absent for non-tabular files.
    pub rows: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub csv_schema: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub test_mode: bool,
    pub sensitivity: Option<f64>,
    pub constants: Option<serde_json::Value>,
    pub summary: serde_json::Value,
    pub files: Vec<FileRecord>,
    pub warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Collects the files of one run; each is written once and recorded once.
#[derive(Debug)]
pub struct RunOutput {
    dir: PathBuf,
    files: Vec<FileRecord>,
    warnings: Vec<String>,
}

impl RunOutput {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn write(&mut self, name: &str, bytes: &[u8], rows: Option<usize>) -> anyhow::Result<()> {
        if self.files.iter().any(|f| f.name == name) || name == MANIFEST_NAME {
            anyhow::bail!("output file {name} written twice");
        }
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            rows,
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> anyhow::Result<()> {
        let bytes = table.to_bytes()?;
        self.write(name, &bytes, Some(table.rows.len()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes, None)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        self.write(name, text.as_bytes(), None)
    }

    pub fn finish(self, mut manifest: Manifest) -> anyhow::Result<Manifest> {
        manifest.files = self.files;
        manifest.warnings = self.warnings;
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST_NAME);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

/// A CSV table with a mandatory header.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("flushing CSV: {e}"))?)
    }
}
