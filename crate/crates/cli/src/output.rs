use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// What was run and what it produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name.
    pub args: Vec<String>,
    /// Directory relative input paths resolve against.
    pub cwd: PathBuf,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    /// Reproducible outputs, relative to the output directory.
    pub outputs: Vec<FileDigest>,
    /// Wall-clock files; these change between runs and carry no digest.
    pub timing_outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String], seed: u64, inputs: &[PathBuf]) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Manifest {
            tool: "krafty".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: argv.to_vec(),
            cwd: std::env::current_dir().context("reading the working directory")?,
            config_path: None,
            seed,
            inputs,
            outputs: Vec::new(),
            timing_outputs: Vec::new(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| krafty::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

/// Files held in memory until the whole command has succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    timings: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.files.push((name.into(), body.into()));
    }

    pub fn add_timing(&mut self, name: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.timings.push((name.into(), body.into()));
    }

    /// Writes every file and then the manifest into `out`. If any write
    /// fails, the files written so far are removed again, along with `out`
    /// itself when this call created it.
    pub fn commit(self, out: &Path, mut manifest: Manifest) -> Result<()> {
        let created = !out.exists();
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| -> Result<()> {
            for (name, body) in self.files.iter().chain(&self.timings) {
                let path = out.join(name);
                written.push(path.clone());
                fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            }
            manifest.outputs = self
                .files
                .iter()
                .map(|(name, body)| FileDigest {
                    path: name.clone(),
                    sha256: sha256_hex(body),
                })
                .collect();
            manifest.timing_outputs = self.timings.iter().map(|(n, _)| n.clone()).collect();
            let path = out.join(MANIFEST);
            written.push(path.clone());
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
        })();
        if result.is_err() {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir(out);
            }
        }
        result
    }
}

pub fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Two-column CSV with a header, quoting names as needed.
pub fn name_value_csv<'a, V: ToString>(
    header: [&str; 2],
    rows: impl Iterator<Item = (&'a str, V)>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for (name, v) in rows {
        w.write_record([name, &v.to_string()])?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("csv encoding: {e}"))
}
