//! Machine-readable run reports.
//!
//! A report is deterministic for a fixed config and seed: the timestamp
//! is the only run-dependent field, and the embedded hash is computed
//! over the report with the timestamp (and the hash slot itself)
//! cleared, so byte-identical hashes certify identical runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Resolved, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// One named check with its measured value and threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `measured < tolerance`.
    pub fn bound(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass: measured < tolerance,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }

    /// Boolean check; `measured` records a count of offending samples.
    pub fn flag(name: &str, pass: bool, offenders: usize, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            measured: offenders as f64,
            tolerance: 0.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub step: f64,
    pub fan_n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Advisories that do not gate the exit status.
    pub warnings: Vec<String>,
    /// File names (relative to the output directory) written by the run.
    pub artifacts: Vec<String>,
    pub provenance: Provenance,
    pub config: RunConfig,
    /// Seconds since the Unix epoch; excluded from the hash.
    pub timestamp: u64,
    /// SHA-256 of the report serialized with `timestamp = 0` and this
    /// field empty.
    pub report_sha256: String,
}

impl Report {
    pub fn new(
        cfg: &Resolved,
        checks: Vec<Check>,
        warnings: Vec<String>,
        artifacts: Vec<String>,
    ) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        let mut report = Report {
            schema: SCHEMA_VERSION,
            experiment: cfg.experiment.id().into(),
            pass,
            checks,
            warnings,
            artifacts,
            provenance: Provenance {
                version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
                seed: cfg.seed,
                step: cfg.step,
                fan_n: cfg.fan_n,
            },
            config: cfg.echo.clone(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            report_sha256: String::new(),
        };
        report.report_sha256 = report.content_hash();
        report
    }

    /// Hash over the deterministic content (timestamp and hash cleared).
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.timestamp = 0;
        canonical.report_sha256 = String::new();
        let bytes = serde_json::to_vec(&canonical).expect("report serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Writes `report.json` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("report.json");
        let mut body = serde_json::to_string_pretty(self).expect("report serialization");
        body.push('\n');
        fs::write(&path, body)?;
        Ok(path)
    }
}
