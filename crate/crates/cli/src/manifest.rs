//! Run manifests: every command that writes files also writes a
//! `manifest.toml` next to them recording the resolved parameters, the
//! canonicalized input paths and the output file names. Feeding the manifest
//! back through `lqcd rerun` reproduces the outputs bitwise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// All tunables a command resolved, defaults included. Fields irrelevant to
/// the subcommand stay unset so the file reads like the command line did.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume_factor: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub params: Params,
    /// Input name -> canonicalized path outside the output directory.
    pub inputs: BTreeMap<String, String>,
    /// Output name -> file name relative to the output directory.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: Params) -> Self {
        RunManifest {
            tool: "lqcd".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            params,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Records an input under its canonical absolute path, so a rerun does
    /// not depend on the working directory.
    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<(), Failure> {
        let canonical = path
            .canonicalize()
            .map_err(|e| Failure::Data(format!("cannot resolve input {}: {e}", path.display())))?;
        self.inputs.insert(name.into(), canonical.display().to_string());
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, file_name: &str) {
        self.outputs.insert(name.into(), file_name.into());
    }

    pub fn input(&self, name: &str) -> Result<PathBuf, Failure> {
        self.inputs
            .get(name)
            .map(PathBuf::from)
            .ok_or_else(|| Failure::Data(format!("manifest lists no `{name}` input")))
    }

    /// Serializes and writes the manifest last, after all other outputs.
    pub fn write(&mut self, out_dir: &Path) -> Result<(), Failure> {
        self.add_output("manifest", MANIFEST_FILE);
        let text = toml::to_string_pretty(self)
            .map_err(|e| Failure::Data(format!("manifest serialization: {e}")))?;
        std::fs::write(out_dir.join(MANIFEST_FILE), text)
            .map_err(|e| Failure::Data(format!("writing manifest: {e}")))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Data(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Data(format!("parsing {}: {e}", path.display())))
    }
}

/// Byte-compares every output recorded in `manifest` between two
/// directories; returns the mismatching file names.
pub fn compare_outputs(
    manifest: &RunManifest,
    original_dir: &Path,
    fresh_dir: &Path,
) -> Result<Vec<String>, Failure> {
    let mut mismatched = Vec::new();
    for file_name in manifest.outputs.values() {
        let original = std::fs::read(original_dir.join(file_name))
            .map_err(|e| Failure::Data(format!("reading original {file_name}: {e}")))?;
        let fresh = std::fs::read(fresh_dir.join(file_name))
            .map_err(|e| Failure::Data(format!("reading rerun {file_name}: {e}")))?;
        if original != fresh {
            mismatched.push(file_name.clone());
        }
    }
    Ok(mismatched)
}
