//! Output directory resolution, artifact hashing and run manifests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io;
use std::path::{Path, PathBuf};

/// Environment variable overriding the default output directory.
pub const OUT_ENV: &str = "CONIC_SHOCK_OUT";
const DEFAULT_OUT: &str = "out";

/// `--out` if given, else `$CONIC_SHOCK_OUT`, else `./out`.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub inputs: Vec<String>,
    pub output_dir: String,
    pub version: String,
    pub wall_seconds: f64,
    pub artifacts: Vec<Artifact>,
}

/// Writes artifacts into one directory and records their hashes.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl ArtifactWriter {
    pub fn create(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.to_string(), sha256: sha256_hex(contents), bytes: contents.len() });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes `manifest.json` listing every artifact written so far.
    pub fn finish(
        self,
        command: &str,
        parameters: serde_json::Value,
        inputs: Vec<String>,
        wall_seconds: f64,
    ) -> io::Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            parameters,
            inputs,
            output_dir: self.dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds,
            artifacts: self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}
