//! Run manifests: enough metadata next to every result file to reproduce it
//! byte for byte (command, resolved parameters, seed, version, digests).

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::io;

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub created_utc: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: std::env::args().collect(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: chrono::Utc::now().to_rfc3339(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: io::sha256_hex(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: io::sha256_hex(path)?,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }
}
