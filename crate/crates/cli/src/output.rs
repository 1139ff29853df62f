//! Output layout, provenance headers and deterministic writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = "zonerisk";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Attached to every output: which stage wrote it and under what settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub config_hash: String,
    pub config: Value,
}

impl Provenance {
    /// `config` must not contain anything that varies between equivalent
    /// runs (paths, worker counts, timings).
    pub fn new(stage: &str, config: Value) -> Self {
        let canonical = serde_json::to_vec(&config).expect("json value serializes");
        Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            stage: stage.into(),
            config_hash: hex::encode(Sha256::digest(&canonical)),
            config,
        }
    }

    /// First line of every CSV.
    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} {}; config sha256 {}; config {}\n",
            self.tool, self.version, self.stage, self.config_hash, self.config
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

pub fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

/// Reads an output of an earlier stage, reporting its absence as a missing
/// prerequisite.
pub fn read_prerequisite(path: &Path, stage: &'static str) -> Result<Vec<u8>> {
    if !path.is_file() {
        return Err(CliError::MissingPrerequisite {
            path: path.to_owned(),
            stage,
        });
    }
    read_bytes(path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T> {
    let bytes = read_prerequisite(path, stage)?;
    serde_json::from_slice(&bytes).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| CliError::Write {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(err)?;
    }
    fs::write(path, bytes).map_err(err)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Writes a CSV whose body is produced by `body`, prefixed with the
/// provenance comment.
pub fn write_csv_with<F>(path: &Path, prov: &Provenance, body: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> zonerisk_core::Result<()>,
{
    let mut buf = prov.csv_comment().into_bytes();
    body(&mut buf)?;
    write_bytes(path, &buf)
}

/// Writes rows with the csv crate (LF terminators).
pub fn write_rows(path: &Path, prov: &Provenance, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    write_csv_with(path, prov, |buf| {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

/// File-name-safe form of a region name: "P.A. Bolzano" -> "p-a-bolzano".
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

/// Finite values in shortest round-trip form, `NA` otherwise.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NA".into()
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), num)
}

/// Paths of every file the pipeline reads or writes under `--out`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: PathBuf) -> Self {
        Layout { root }
    }

    pub fn ingest_report(&self) -> PathBuf {
        self.root.join("ingest_report.json")
    }
    pub fn daily_cache(&self) -> PathBuf {
        self.root.join("cache/daily.csv")
    }
    pub fn labels_cache(&self) -> PathBuf {
        self.root.join("cache/labels.csv")
    }
    pub fn populations_cache(&self) -> PathBuf {
        self.root.join("cache/populations.csv")
    }
    pub fn weekly(&self, slug: &str) -> PathBuf {
        self.root.join("weekly").join(format!("{slug}.csv"))
    }
    pub fn correlation(&self) -> PathBuf {
        self.root.join("correlation.csv")
    }
    pub fn search_dir(&self) -> PathBuf {
        self.root.join("search")
    }
    pub fn best(&self, slug: &str) -> PathBuf {
        self.search_dir().join(format!("{slug}.best.json"))
    }
    pub fn records(&self, slug: &str) -> PathBuf {
        self.search_dir().join(format!("{slug}.records.csv"))
    }
    pub fn search_manifest(&self) -> PathBuf {
        self.root.join("search_manifest.json")
    }
    pub fn jackknife_dir(&self) -> PathBuf {
        self.root.join("jackknife")
    }
    pub fn jackknife_manifest(&self) -> PathBuf {
        self.root.join("jackknife_manifest.json")
    }
    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}
