//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Settings;

pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, files: Vec::new() })
    }

    /// Opens `name` for writing inside the output directory.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        if !self.files.iter().any(|n| n == name) {
            self.files.push(name.to_string());
        }
        Ok(BufWriter::new(f))
    }

    /// Runs `body` on a fresh writer for `name` and flushes it.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = self.file(name)?;
        body(&mut w)?;
        w.flush().with_context(|| format!("writing {name}"))?;
        Ok(())
    }

    /// Writes `manifest.json`: resolved settings plus SHA-256 digests of every
    /// input and output file.
    pub fn finish(self, command: &str, settings: &Settings, inputs: &[PathBuf], wall_ms: Option<u128>) -> Result<()> {
        let mut input_hashes = BTreeMap::new();
        for path in inputs {
            hash_tree(path, &mut input_hashes)?;
        }
        let mut output_hashes = BTreeMap::new();
        for name in &self.files {
            output_hashes.insert(name.clone(), sha256_file(&self.dir.join(name))?);
        }
        let manifest = Manifest {
            tool: "pam",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: settings.resolved(),
            inputs: input_hashes,
            outputs: output_hashes,
            wall_time_ms: wall_ms,
        };
        let mut w = BufWriter::new(File::create(self.dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<u128>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

// Directories contribute every file below them, keyed by path, in sorted order.
fn hash_tree(path: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for e in entries {
            hash_tree(&e, out)?;
        }
    } else {
        out.insert(path.display().to_string(), sha256_file(path)?);
    }
    Ok(())
}
