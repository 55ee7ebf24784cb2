//! Run manifests and the file context that feeds them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use omnikit_core::graph_store::{self, GraphCollection, MatrixFormat};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A check that ran to completion and did not hold. Maps to exit code 1.
#[derive(Debug)]
pub struct Failed(pub String);

impl fmt::Display for Failed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

fn hash_file(path: &Path) -> Result<FileHash> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileHash {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Everything a command read and wrote, plus the seeds it used.
#[derive(Debug, Default)]
pub struct Ctx {
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
    seeds: BTreeMap<String, u64>,
    manifest_at: Option<PathBuf>,
}

impl Ctx {
    /// Default manifest location, next to the command's main output.
    pub fn manifest_at(&mut self, path: PathBuf) {
        self.manifest_at = Some(path);
    }

    pub fn manifest_path(&self) -> Option<&Path> {
        self.manifest_at.as_deref()
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let h = hash_file(path)?;
        if !self.inputs.contains(&h) {
            self.inputs.push(h);
        }
        Ok(())
    }

    fn output(&mut self, path: &Path) -> Result<()> {
        let h = hash_file(path)?;
        self.outputs.retain(|o| o.path != h.path);
        self.outputs.push(h);
        Ok(())
    }

    pub fn read_matrix(&mut self, path: &Path) -> Result<DMatrix<f64>> {
        let format = if path.extension().is_some_and(|e| e == "json") {
            MatrixFormat::JsonTensor
        } else {
            MatrixFormat::DenseCsv
        };
        let x = graph_store::load_matrix(path, format)?;
        self.input(path)?;
        Ok(x)
    }

    pub fn read_text(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.input(path)?;
        Ok(text)
    }

    pub fn read_collection(&mut self, dir: &Path, format: MatrixFormat) -> Result<GraphCollection> {
        let c = graph_store::load_collection(dir, format)?;
        let mut files: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != "manifest.json"))
            .collect();
        files.sort();
        for f in files {
            self.input(&f)?;
        }
        Ok(c)
    }

    pub fn write_matrix(&mut self, x: &DMatrix<f64>, path: &Path) -> Result<()> {
        graph_store::save_matrix(x, path, MatrixFormat::DenseCsv)?;
        self.output(path)
    }

    pub fn write_collection(&mut self, c: &GraphCollection, dir: &Path) -> Result<()> {
        for f in graph_store::save_collection(c, dir)? {
            self.output(&f.path)?;
        }
        Ok(())
    }

    pub fn write_text(&mut self, path: &Path, text: &str) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        self.output(path)
    }

    pub fn write_json(&mut self, path: &Path, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(path, &text)
    }

    pub fn write_tensor(&mut self, t: &[Vec<Vec<f64>>], path: &Path) -> Result<()> {
        graph_store::save_tensor(t, path)?;
        self.output(path)
    }

    pub fn into_manifest(self, command: &str, options: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: "omnikit",
            version: VERSION,
            command: command.to_string(),
            options,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
        }
    }
}

/// Resolved record of one command invocation. Contains no timestamps, so an
/// identical rerun produces an identical manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub options: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

/// Tidy csv: a header line, then one line per row.
pub fn tidy_csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}
