use crate::error::{HawkesError, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| HawkesError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance record written next to every artifact.
///
/// The full run configuration is embedded under `config.` keys, so a
/// manifest is itself a valid config document for re-running.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(super::render_kv(&self.config).as_bytes()))
    }

    pub fn render(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("manifest.command".to_string(), self.command.clone());
        m.insert("manifest.seed".to_string(), self.seed.to_string());
        m.insert("manifest.version".to_string(), env!("CARGO_PKG_VERSION").to_string());
        m.insert("manifest.config_hash".to_string(), self.config_hash());
        for (k, v) in &self.config {
            m.insert(format!("config.{k}"), v.clone());
        }
        for (p, d) in &self.inputs {
            m.insert(format!("input.{p}"), d.clone());
        }
        for (p, d) in &self.outputs {
            m.insert(format!("output.{p}"), d.clone());
        }
        super::render_kv(&m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| HawkesError::io(path, e))
    }
}
