use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileHash {
    pub path: String,
    pub bytes: u64,
    /// SHA-256 of `blob <len>\0<content>`, as git computes object ids.
    pub sha256: String,
}

/// Content hash in git's object format.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path, label: &str) -> Result<FileHash> {
    let content = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileHash { path: label.to_string(), bytes: content.len() as u64, sha256: blob_hash(&content) })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    /// Resolved configuration; the output directory is shown as `.`.
    config: RunConfig,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
}

/// Writes `manifest-<command>.json` into the output directory. Output
/// paths are relative to that directory; nothing time-dependent is recorded.
pub fn write_manifest(cfg: &RunConfig, command: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<PathBuf> {
    let mut inputs: Vec<FileHash> = inputs
        .iter()
        .map(|p| {
            // files produced by earlier steps are named relative to the output directory
            let label = p.strip_prefix(&cfg.out).map_or_else(|_| p.display().to_string(), |r| r.display().to_string());
            hash_file(p, &label)
        })
        .collect::<Result<_>>()?;
    inputs.sort_by(|a, b| a.path.cmp(&b.path));
    inputs.dedup();
    let mut outputs: Vec<FileHash> = outputs
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(&cfg.out).unwrap_or(p);
            hash_file(p, &rel.display().to_string())
        })
        .collect::<Result<_>>()?;
    outputs.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: RunConfig { out: PathBuf::from("."), ..cfg.clone() },
        inputs,
        outputs,
    };
    let path = cfg.out.join(format!("manifest-{command}.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_git_sha256_object_id() {
        // `git hash-object --object-format=sha256` of an empty file
        assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }
}
