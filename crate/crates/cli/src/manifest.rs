//! Run manifest: config echo, seeds and a content hash per output file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

/// Collects output files as they are produced and lands as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct Manifest {
    experiment: String,
    version: String,
    base_seed: u64,
    paths: u32,
    config: serde_json::Value,
    outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn new(experiment: &str, config: serde_json::Value, base_seed: u64, paths: u32) -> Self {
        Self {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed,
            paths,
            config,
            outputs: Vec::new(),
        }
    }

    /// Register (and hash) a file that was just written.
    pub fn add_file(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let data =
            std::fs::read(path).with_context(|| format!("hashing output {}", path.display()))?;
        let digest = Sha256::digest(&data);
        let rel = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.outputs.push(OutputEntry {
            path: rel,
            sha256: format!("{digest:x}"),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    /// Write `manifest.json` (outputs sorted by name for determinism).
    pub fn write(mut self, out_dir: &Path) -> Result<PathBuf> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
