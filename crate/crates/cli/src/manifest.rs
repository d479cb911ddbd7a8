//! Run manifests: config echo, produced files with content hashes.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct ManifestDoc<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    config: &'a serde_json::Value,
    wall_time_s: f64,
    files: Vec<FileEntry>,
}

/// Collects artifacts for one run directory and writes `manifest.json`.
pub struct Manifest {
    command: String,
    out_dir: PathBuf,
    seed: u64,
    threads: usize,
    config: serde_json::Value,
    files: Vec<PathBuf>,
    started: Instant,
}

impl Manifest {
    pub fn new(
        command: &str,
        out_dir: &Path,
        seed: u64,
        threads: usize,
        config: serde_json::Value,
    ) -> Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;
        Ok(Manifest {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            seed,
            threads,
            config,
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Resolve an artifact path inside the run directory and register it.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.files.push(path.clone());
        path
    }

    pub fn write(self) -> Result<PathBuf> {
        let mut entries = Vec::with_capacity(self.files.len());
        for path in &self.files {
            let bytes = std::fs::read(path)
                .with_context(|| format!("artifact {} missing", path.display()))?;
            let digest = Sha256::digest(&bytes);
            entries.push(FileEntry {
                path: path
                    .strip_prefix(&self.out_dir)
                    .unwrap_or(path)
                    .display()
                    .to_string(),
                sha256: format!("{digest:x}"),
            });
        }
        let doc = ManifestDoc {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            threads: self.threads,
            config: &self.config,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            files: entries,
        };
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        Ok(path)
    }
}
