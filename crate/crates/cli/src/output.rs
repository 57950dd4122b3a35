//! Output directories and their run manifests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::{DateTime, SecondsFormat};
use herdsim_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

/// Provenance record written to every output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    /// RFC 3339, UTC. `SOURCE_DATE_EPOCH` pins it for reproducible trees.
    pub timestamp: String,
    pub tool_version: String,
    /// SHA-256 of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every file written next to the manifest.
    pub outputs: BTreeMap<String, String>,
}

pub fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| io_error(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Serialization(e.to_string()))
}

fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs() as i64)
        });
    DateTime::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// A directory being filled by one command. Files written through it are
/// digested into the manifest by [`OutDir::finish`].
pub struct OutDir {
    path: PathBuf,
    written: Vec<String>,
    inputs: Vec<PathBuf>,
    config_hash: Option<String>,
    seed: Option<u64>,
}

impl OutDir {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(|e| io_error(&path, e))?;
        Ok(OutDir {
            path,
            written: Vec::new(),
            inputs: Vec::new(),
            config_hash: None,
            seed: None,
        })
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn config(&mut self, canonical: &str, seed: Option<u64>) -> &mut Self {
        self.config_hash = Some(sha256_hex(canonical.as_bytes()));
        self.seed = seed;
        self
    }

    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.path.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| io_error(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path.join(name);
        self.write_with(name, |w| w.write_all(text.as_bytes()).map_err(|e| io_error(&path, e)))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_text(name, &to_json(value)?)
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self) -> Result<RunManifest> {
        let mut inputs = BTreeMap::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), file_digest(p)?);
        }
        let mut outputs = BTreeMap::new();
        for name in &self.written {
            outputs.insert(name.clone(), file_digest(&self.path.join(name))?);
        }
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            config_hash: self.config_hash,
            seed: self.seed,
            timestamp: timestamp(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            outputs,
        };
        let path = self.path.join(MANIFEST);
        fs::write(&path, to_json(&manifest)?).map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }
}
