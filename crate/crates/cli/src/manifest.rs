use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, Config};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// What one subcommand read and wrote. Two runs with the same inputs,
/// config and seeds differ only in `created_at`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub created_at: String,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// The effective configuration, overrides applied.
    pub config: String,
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let mut file = File::open(path).map_err(|e| CliError::DataMessage(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| CliError::DataMessage(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: file_sha256(p)?,
            })
        })
        .collect()
}

pub fn manifest_path(config: &Config, subcommand: &str) -> PathBuf {
    config.output.dir.join("manifests").join(format!("{subcommand}.json"))
}

pub fn write_manifest(
    config: &Config,
    subcommand: &str,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    seeds: &[(&str, u64)],
) -> Result<PathBuf, CliError> {
    let manifest = Manifest {
        subcommand: subcommand.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        config_sha256: config.sha256(),
        seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        inputs: digests(inputs)?,
        outputs: digests(outputs)?,
        config: config.to_toml(),
    };
    let path = manifest_path(config, subcommand);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::DataMessage(format!("{}: {e}", path.display())))
}
