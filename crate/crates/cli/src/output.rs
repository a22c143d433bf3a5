//! Atomic emission of result files and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::Outcome;

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub problem: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
    pub headline: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Writes every result file, then the manifest last.
pub fn emit(dir: &Path, outcome: &Outcome, mut manifest: RunManifest) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in &outcome.files {
        if name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(std::io::Error::other(format!("refusing to write {name:?}")));
        }
        write_atomic(dir, name, bytes)?;
        manifest.files.push(FileEntry { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(dir, "manifest.json", text.as_bytes())?;
    Ok(dir.join("manifest.json"))
}
