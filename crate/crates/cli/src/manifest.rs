use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use spellforge_core::Result;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started: String,
    pub finished: String,
    pub elapsed_seconds: f64,
}

pub fn sha256_bytes(b: &[u8]) -> String {
    hex::encode(Sha256::digest(b))
}

pub fn sha256_file(p: &Path) -> Result<String> {
    let mut f = std::fs::File::open(p)?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h)?;
    Ok(hex::encode(h.finalize()))
}

/// Collects what a command read and wrote, then writes `manifest.json`.
pub struct Recorder {
    command: String,
    config: Option<String>,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: chrono::DateTime<Utc>,
    clock: Instant,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            config: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Utc::now(),
            clock: Instant::now(),
        }
    }

    pub fn config(&mut self, bytes: &[u8]) {
        self.config = Some(sha256_bytes(bytes));
    }

    pub fn seed(&mut self, s: u64) {
        self.seeds.push(s);
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let digest = |ps: &[PathBuf]| -> Result<Vec<FileDigest>> {
            ps.iter()
                .map(|p| {
                    Ok(FileDigest {
                        path: p.display().to_string(),
                        sha256: sha256_file(p)?,
                    })
                })
                .collect()
        };
        let m = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: self.config,
            seeds: self.seeds,
            threads: rayon::current_num_threads(),
            inputs: digest(&self.inputs)?,
            outputs: digest(&self.outputs)?,
            started: self.started.to_rfc3339_opts(SecondsFormat::Secs, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
        };
        let path = dir.join(MANIFEST);
        std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(path)
    }
}
