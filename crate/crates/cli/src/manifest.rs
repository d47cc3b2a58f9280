use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, StageName};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// A stage output, relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the stage's parameters, input files and upstream outputs.
    pub input_hash: String,
    pub outputs: Vec<OutputFile>,
    pub wall_ms: u64,
    /// Set when the last invocation reused cached outputs.
    #[serde(default)]
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub stages: BTreeMap<StageName, StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            stages: BTreeMap::new(),
        }
    }

    /// Loads `<dir>/manifest.json`, or `None` when there is none yet.
    pub fn load(dir: &Path) -> Result<Option<Self>, CliError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        fs::write(&tmp, text + "\n")?;
        fs::rename(tmp, dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    /// True when `stage` was recorded with `input_hash` and every output
    /// still has its recorded digest.
    pub fn is_fresh(&self, dir: &Path, stage: StageName, input_hash: &str) -> bool {
        let Some(rec) = self.stages.get(&stage) else {
            return false;
        };
        rec.input_hash == input_hash
            && rec
                .outputs
                .iter()
                .all(|o| file_sha256(&dir.join(&o.path)).is_ok_and(|h| h == o.sha256))
    }

    pub fn total_wall_ms(&self) -> u64 {
        self.stages.values().map(|s| s.wall_ms).sum()
    }
}

/// Exclusive ownership of a run directory; released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(RunLock { path }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
