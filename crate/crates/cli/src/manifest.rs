//! Run manifests written beside every command's outputs.

use crate::config::PipelineConfig;
use crate::error::{io_err, CliError};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    seed: u64,
    deterministic: bool,
    threads: usize,
    versions: BTreeMap<&'static str, &'static str>,
    outputs: Vec<OutputEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
    config: &'a PipelineConfig,
}

/// Collects the artifacts of one command.
pub struct Run<'a> {
    pub cfg: &'a PipelineConfig,
    command: String,
    outputs: Vec<PathBuf>,
    threads: usize,
    started: Instant,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a PipelineConfig, command: &str, threads: usize) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.output_dir).map_err(|e| io_err(&cfg.output_dir, e))?;
        Ok(Run {
            cfg,
            command: command.to_string(),
            outputs: Vec::new(),
            threads,
            started: Instant::now(),
        })
    }

    /// Path of an artifact inside the output directory, recorded for the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let p = self.cfg.output_dir.join(name);
        self.outputs.push(p.clone());
        p
    }

    /// Records an artifact written at an arbitrary path.
    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let p = self.output(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(&p, text + "\n").map_err(|e| io_err(&p, e))?;
        Ok(p)
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let mut outputs = Vec::new();
        for p in &self.outputs {
            let bytes = std::fs::read(p).map_err(|e| io_err(p, e))?;
            outputs.push(OutputEntry {
                file: p
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let versions = BTreeMap::from([
            ("socweave-cli", env!("CARGO_PKG_VERSION")),
            ("socweave-core", socweave::VERSION),
        ]);
        let m = Manifest {
            command: &self.command,
            config_sha256: self.cfg.hash(),
            seed: self.cfg.seed,
            deterministic: self.cfg.deterministic,
            threads: self.threads,
            versions,
            outputs,
            elapsed_seconds: (!self.cfg.deterministic).then(|| self.started.elapsed().as_secs_f64()),
            config: self.cfg,
        };
        let path = self
            .cfg
            .output_dir
            .join(format!("manifest.{}.json", self.command.replace(' ', "-")));
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}
