//! Run manifests and self-describing result documents.
//!
//! Every JSON result is `{"manifest": …, "payload": …}`. The manifest holds
//! the command line that produced the payload and the SHA-256 of the payload's
//! canonical compact serialization, so a file can be replayed and checked.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// An input file together with the payload hash it had when it was read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: String,
    pub payload_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_sweep: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_max: Option<usize>,
    #[serde(default)]
    pub inputs: Vec<InputRef>,
    #[serde(default)]
    pub outputs: Vec<String>,
    pub toolkit_version: String,
    #[serde(default)]
    pub payload_sha256: String,
}

impl RunManifest {
    pub fn new(command: &str, dimension: usize) -> Self {
        Self {
            command: command.to_owned(),
            dimension,
            seed: None,
            shots: None,
            loss_db: None,
            input_state: None,
            pre_op: None,
            loss_sweep: None,
            dimension_max: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            toolkit_version: TOOLKIT_VERSION.to_owned(),
            payload_sha256: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<P> {
    pub manifest: RunManifest,
    pub payload: P,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the compact JSON of `payload` with object keys sorted.
pub fn payload_hash<P: Serialize>(payload: &P) -> CliResult<String> {
    let canonical = serde_json::to_value(payload)?;
    Ok(sha256_hex(&serde_json::to_vec(&canonical)?))
}

impl<P: Serialize + DeserializeOwned> Document<P> {
    /// Seals `payload` with its hash.
    pub fn new(mut manifest: RunManifest, payload: P) -> CliResult<Self> {
        manifest.payload_sha256 = payload_hash(&payload)?;
        Ok(Self { manifest, payload })
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()?)
            .map_err(|e| CliError::bad_input(format!("cannot write {}: {e}", path.display())))
    }

    /// Parses and verifies the payload hash.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let doc: Self = serde_json::from_str(text)?;
        let hash = payload_hash(&doc.payload)?;
        if hash != doc.manifest.payload_sha256 {
            return Err(CliError::bad_input(format!(
                "payload hash mismatch: manifest {} but payload hashes to {hash}",
                doc.manifest.payload_sha256
            )));
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::bad_input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Reads only the manifest of any result document.
pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let doc: Document<serde_json::Value> = Document::read(path)?;
    Ok(doc.manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_detects_tampering() {
        let doc = Document::new(
            RunManifest::new("synthesize", 3),
            serde_json::json!({"x": 1.5}),
        )
        .unwrap();
        let text = doc.to_json().unwrap();
        assert_eq!(
            Document::<serde_json::Value>::from_json(&text).unwrap(),
            doc
        );
        let tampered = text.replace("1.5", "1.25");
        assert!(Document::<serde_json::Value>::from_json(&tampered).is_err());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
