//! The reproducibility record written beside every command's outputs.
//!
//! A manifest is fully determined by the inputs and the resolved
//! configuration: no timestamps, no hostnames, no absolute-path leakage
//! beyond what the user passed. Rerunning a command with the same inputs
//! and flags rewrites every artifact byte for byte.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub crate_version: String,
    /// Input role (e.g. "corpus", "tagger") to path + content digest.
    pub inputs: BTreeMap<String, InputDigest>,
    /// Fully resolved configuration after merging file and flags.
    pub config: serde_json::Value,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_sha256: String,
    pub seed: Option<u64>,
    /// Files this run wrote, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            config_sha256: sha256_bytes(b"null"),
            seed: None,
            outputs: Vec::new(),
        }
    }

    /// Registers and digests one input file.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        let sha256 = sha256_file(path).map_err(|e| {
            CliError::Data(format!("cannot read input {}: {e}", path.display()))
        })?;
        self.inputs.insert(
            role.to_string(),
            InputDigest {
                path: path.display().to_string(),
                sha256,
            },
        );
        Ok(())
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) -> Result<(), CliError> {
        let value = serde_json::to_value(config)?;
        self.config_sha256 = sha256_bytes(serde_json::to_string(&value)?.as_bytes());
        self.config = value;
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    /// Writes `manifest.json` into `dir`, which must already exist.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_json(dir, "manifest.json", self)
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
