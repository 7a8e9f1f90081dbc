//! Run manifest: what went in, what came out, and the counts in between.
//! No timestamps, so identical runs give identical manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formats::{write_file, FormatError};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String, FormatError> {
    let bytes = std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Input name to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Per-stage counters.
    pub counts: BTreeMap<String, serde_json::Value>,
    /// Output paths relative to the output directory.
    pub outputs: BTreeMap<String, OutputEntry>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_sha256: String) -> Self {
        Manifest {
            tool: concat!("corpusforge ", env!("CARGO_PKG_VERSION")).into(),
            command: command.into(),
            seed,
            config_sha256,
            inputs: BTreeMap::new(),
            counts: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<(), FormatError> {
        self.inputs.insert(name.into(), file_sha256(path)?);
        Ok(())
    }

    pub fn count<T: Serialize>(&mut self, stage: &str, value: &T) {
        self.counts.insert(
            stage.into(),
            serde_json::to_value(value).expect("counts serialize"),
        );
    }

    /// Write `contents` under the output directory and record it.
    pub fn emit(&mut self, out_dir: &Path, rel: &str, contents: &str) -> Result<(), FormatError> {
        write_file(&out_dir.join(rel), contents)?;
        self.outputs.insert(
            rel.into(),
            OutputEntry {
                sha256: sha256_hex(contents.as_bytes()),
                bytes: contents.len(),
            },
        );
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), FormatError> {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        write_file(&out_dir.join("manifest.json"), &json)
    }
}
