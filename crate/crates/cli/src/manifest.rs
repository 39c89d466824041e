//! Run manifests written beside every output file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
    pub output: String,
}

/// Shared by every output of one invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl RunContext {
    pub fn manifest_for(&self, output: &Path) -> RunManifest {
        RunManifest {
            command_line: self.command_line.clone(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
            output: output
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }
}

/// UTC now, or `SOURCE_DATE_EPOCH` when set so that manifests can be
/// reproduced too.
fn timestamp() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0));
    fixed
        .unwrap_or_else(Utc::now)
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Writes `bytes` to `path` and the manifest beside it.
pub fn write_output(path: &Path, bytes: &[u8], ctx: &RunContext) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    let manifest = ctx.manifest_for(path);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    let mpath = manifest_path(path);
    std::fs::write(&mpath, json).with_context(|| format!("writing {}", mpath.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_name() {
        assert_eq!(
            manifest_path(Path::new("out/trace.jsonl")),
            PathBuf::from("out/trace.jsonl.manifest.json")
        );
    }

    #[test]
    fn written_manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let ctx = RunContext {
            command_line: vec!["rebo".into(), "x".into()],
            config_hash: "ab".repeat(32),
            seed: Some(3),
        };
        write_output(&path, b"x\n", &ctx).unwrap();
        let m: RunManifest = serde_json::from_slice(&std::fs::read(manifest_path(&path)).unwrap()).unwrap();
        assert_eq!(m.seed, Some(3));
        assert_eq!(m.output, "a.csv");
        assert_eq!(m.tool_version, env!("CARGO_PKG_VERSION"));
        assert!(DateTime::parse_from_rfc3339(&m.timestamp).is_ok());
    }
}
