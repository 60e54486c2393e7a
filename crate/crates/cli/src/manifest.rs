//! Output directory bookkeeping and the machine-readable run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| mlergm::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// Fully resolved configuration; pass this file back via `--config` to replay.
    pub config: Config,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Command-specific results (layer counts, coverage, thresholds, ...).
    pub results: serde_json::Value,
    pub started_unix_seconds: u64,
    pub elapsed_seconds: f64,
}

/// Collects the files a command writes so the manifest can digest them.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
    started: Instant,
    started_unix: u64,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` atomically and records it.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        mlergm::io::write_atomic(&path, contents)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn finish(
        self,
        command: &str,
        config: Config,
        seed: u64,
        inputs: &[PathBuf],
        results: serde_json::Value,
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "mlergm",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
            inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
            outputs: self.written.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
            results,
            started_unix_seconds: self.started_unix,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        mlergm::io::write_atomic(&self.path(MANIFEST), &(json + "\n"))?;
        Ok(())
    }
}
