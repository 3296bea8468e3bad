//! Run manifests: config hash, per-output checksums, convergence metadata
//! and wall times. `verify` re-hashes the recorded outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Cli, CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub jobs: String,
    pub outputs: Vec<OutputRecord>,
    /// Per-point convergence metadata (command-specific).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<serde_json::Value>,
    pub wall_ms: u128,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(data);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct ManifestBuilder {
    command: String,
    config_sha256: String,
    jobs: String,
    outputs: Vec<OutputRecord>,
    points: Vec<serde_json::Value>,
    started: Instant,
    out_dir: PathBuf,
}

impl ManifestBuilder {
    pub fn new(cli: &Cli, command: &str) -> CliResult<Self> {
        let config_sha256 = match &cli.config {
            Some(p) => sha256_hex(&std::fs::read(p)?),
            None => String::new(),
        };
        let jobs = if cli.serial {
            "serial".to_string()
        } else {
            cli.jobs.map(|j| j.to_string()).unwrap_or_else(|| "all-cores".into())
        };
        Ok(Self {
            command: command.to_string(),
            config_sha256,
            jobs,
            outputs: Vec::new(),
            points: Vec::new(),
            started: Instant::now(),
            out_dir: cli.out.clone(),
        })
    }

    /// Write a file under the output directory and record its checksum.
    pub fn write_output(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn push_point(&mut self, value: serde_json::Value) {
        self.points.push(value);
    }

    pub fn finish(self) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: self.config_sha256,
            jobs: self.jobs,
            outputs: self.outputs,
            points: self.points,
            wall_ms: self.started.elapsed().as_millis(),
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(self.out_dir.join("manifest.json"), json)?;
        Ok(())
    }
}

/// Re-check every output recorded in `dir/manifest.json`.
pub fn verify_dir(dir: &Path) -> CliResult<()> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed manifest: {e}")))?;
    let mut failures = Vec::new();
    for rec in &manifest.outputs {
        let path = dir.join(&rec.path);
        match std::fs::read(&path) {
            Ok(data) => {
                let hash = sha256_hex(&data);
                if hash != rec.sha256 {
                    failures.push(format!("{}: checksum mismatch", rec.path));
                } else {
                    println!("ok {}", rec.path);
                }
            }
            Err(e) => failures.push(format!("{}: {e}", rec.path)),
        }
    }
    if failures.is_empty() {
        println!("manifest verified: {} outputs", manifest.outputs.len());
        Ok(())
    } else {
        Err(CliError::Io(failures.join("; ")))
    }
}
