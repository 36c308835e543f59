//! Stage manifests: input hashes, parameter dump, output hashes. Every
//! artifact is reproducible from its manifest, and downstream stages refuse
//! to consume artifacts whose recorded hashes no longer match.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chrono::{TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    /// Wall clock, or `SOURCE_DATE_EPOCH` when set (reproducible runs).
    pub timestamp: String,
    /// Input path -> SHA-256, as configured.
    pub inputs: BTreeMap<String, String>,
    /// Parameter dump of the stage.
    pub params: serde_json::Value,
    /// Output file name -> SHA-256, relative to the output directory.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn now_rfc3339() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok())
        .unwrap_or_else(|| Utc::now().timestamp());
    Utc.timestamp_opt(secs, 0)
        .single()
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

pub struct ManifestBuilder {
    stage: &'static str,
    out_dir: PathBuf,
    inputs: BTreeMap<String, String>,
    params: serde_json::Value,
    outputs: Vec<String>,
}

impl ManifestBuilder {
    pub fn new(stage: &'static str, out_dir: &Path) -> Self {
        ManifestBuilder {
            stage,
            out_dir: out_dir.to_path_buf(),
            inputs: BTreeMap::new(),
            params: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), Failure> {
        let hash = sha256_file(path).map_err(Failure::Data)?;
        self.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    pub fn params(&mut self, params: impl Serialize) {
        self.params = serde_json::to_value(params).expect("serializable params");
    }

    /// Writes an output file atomically and registers it in the manifest.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        atomic_write(&self.out_dir.join(name), bytes).map_err(Failure::Data)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Hashes the registered outputs and writes `manifest_<stage>.json`.
    pub fn finish(self) -> Result<(), Failure> {
        let mut outputs = BTreeMap::new();
        for name in &self.outputs {
            let hash = sha256_file(&self.out_dir.join(name)).map_err(Failure::Data)?;
            outputs.insert(name.clone(), hash);
        }
        let manifest = Manifest {
            stage: self.stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: now_rfc3339(),
            inputs: self.inputs,
            params: self.params,
            outputs,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Failure::Data(anyhow!("manifest serialization: {e}")))?;
        atomic_write(
            &self.out_dir.join(format!("manifest_{}.json", self.stage)),
            json.as_bytes(),
        )
        .map_err(Failure::Data)?;
        Ok(())
    }
}

pub fn manifest_path(out_dir: &Path, stage: &str) -> PathBuf {
    out_dir.join(format!("manifest_{stage}.json"))
}

pub fn load_manifest(out_dir: &Path, stage: &str) -> anyhow::Result<Manifest> {
    let path = manifest_path(out_dir, stage);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))
}

/// Checks that an upstream artifact exists and is not stale before use.
///
/// Verifies that the artifact's hash matches the producing stage's manifest
/// and that the producing stage's inputs are unchanged on disk. With
/// `force`, mismatches degrade to warnings.
pub fn require_artifact(
    out_dir: &Path,
    stage: &str,
    command: &str,
    name: &str,
    force: bool,
) -> Result<PathBuf, Failure> {
    let path = out_dir.join(name);
    if !path.exists() {
        return Err(Failure::Usage(anyhow!(
            "missing artifact {name}: run `debatenet {command}` first"
        )));
    }
    let manifest = match load_manifest(out_dir, stage) {
        Ok(m) => m,
        Err(e) => {
            return Err(Failure::Usage(anyhow!(
                "artifact {name} has no manifest ({e}); run `debatenet {command}` first"
            )))
        }
    };
    let mut stale: Option<String> = None;
    match manifest.outputs.get(name) {
        None => stale = Some(format!("{name} is not recorded in manifest_{stage}.json")),
        Some(recorded) => {
            let actual = sha256_file(&path).map_err(Failure::Data)?;
            if actual != *recorded {
                stale = Some(format!("{name} changed after `{command}` ran"));
            }
        }
    }
    if stale.is_none() {
        for (input, recorded) in &manifest.inputs {
            let input_path = Path::new(input);
            match sha256_file(input_path) {
                Ok(actual) if actual == *recorded => {}
                Ok(_) => {
                    stale = Some(format!(
                        "input {input} of `{command}` changed since it ran"
                    ));
                    break;
                }
                Err(_) => {
                    stale = Some(format!("input {input} of `{command}` is unreadable"));
                    break;
                }
            }
        }
    }
    if let Some(reason) = stale {
        if force {
            log::warn!("{reason} (ignored by --force)");
        } else {
            return Err(Failure::Usage(anyhow!(
                "stale pipeline: {reason}; re-run `debatenet {command}` or pass --force"
            )));
        }
    }
    Ok(path)
}
