//! Run records, the substream session ledger, atomic output writing and the
//! flat CSV rendering of JSON reports.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sfrl::{Result, SfrlError};

/// Hex SHA-256 of raw bytes; used as the config digest in every report.
pub fn digest_of(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One claimed block of codebook substreams under a given seed.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub seed: u64,
    pub first_substream: u64,
    pub count: u64,
    pub label: String,
}

/// Tracks the substreams a run has consumed; reuse within one run is a
/// config error, since schemes assume independent common randomness.
#[derive(Debug, Default, Serialize)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn claim(&mut self, seed: u64, first: u64, count: u64, label: &str) -> Result<()> {
        let end = first.saturating_add(count);
        for e in &self.entries {
            let e_end = e.first_substream.saturating_add(e.count);
            if e.seed == seed && first < e_end && e.first_substream < end {
                return Err(SfrlError::Validation(format!(
                    "substream collision under seed {seed}: {label:?} overlaps {:?}",
                    e.label
                )));
            }
        }
        self.entries.push(LedgerEntry {
            seed,
            first_substream: first,
            count,
            label: label.into(),
        });
        Ok(())
    }
}

/// The persisted record of one CLI invocation. Re-running the same
/// (command, config, seed) reproduces `report` bit-exactly; only
/// `timestamp` may differ.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub substream_ledger: Ledger,
    pub report: serde_json::Value,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunRecord {
    pub fn new(
        command: &str,
        config_digest: String,
        master_seed: u64,
        ledger: Ledger,
        report: serde_json::Value,
    ) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .ok();
        RunRecord {
            command: command.into(),
            config_digest,
            master_seed,
            substream_ledger: ledger,
            report,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
        }
    }

    /// Record without a timestamp, so the serialized bytes are reproducible.
    pub fn deterministic(
        command: &str,
        config_digest: String,
        master_seed: u64,
        ledger: Ledger,
        report: serde_json::Value,
    ) -> Self {
        let mut record = Self::new(command, config_digest, master_seed, ledger, report);
        record.timestamp = None;
        record
    }
}

/// Writes files atomically (temp file + rename) into one output directory.
pub struct OutputWriter {
    dir: PathBuf,
}

impl OutputWriter {
    pub fn new(dir: &std::path::Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| SfrlError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.into() })
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, bytes)
            .and_then(|_| std::fs::rename(&tmp, &target))
            .map_err(|e| SfrlError::Validation(format!("cannot write {}: {e}", target.display())))
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).unwrap();
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }
}

/// Render a JSON report as flat `key,value` CSV rows (arrays indexed,
/// objects dotted).
pub fn to_csv(value: &serde_json::Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

fn flatten(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}
