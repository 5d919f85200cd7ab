//! Stage directories and provenance sidecars.
//!
//! Every file a command writes gets a `<file>.meta.json` next to it with the
//! command, the tool version, the parameters and the SHA-256 of each input.
//! Paths are recorded relative to the config directory or the output directory
//! so the sidecars do not depend on where the project lives.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Project;
use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct InputRecord {
    pub root: &'static str,
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    version: &'a str,
    output: &'a str,
    sha256: &'a str,
    inputs: &'a [InputRecord],
    parameters: &'a serde_json::Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn portable(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// One command's output directory. The directory is emptied when the stage
/// starts so that reruns never leave stale files behind.
pub struct Stage<'a> {
    project: &'a Project,
    command: &'static str,
    dir: PathBuf,
    inputs: BTreeMap<(&'static str, String), String>,
    parameters: serde_json::Value,
    outputs: Vec<String>,
}

impl<'a> Stage<'a> {
    pub fn begin(project: &'a Project, command: &'static str) -> Result<Self> {
        let dir = project.out_dir.join(command);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            project,
            command,
            dir,
            inputs: BTreeMap::new(),
            parameters: serde_json::Value::Null,
            outputs: Vec::new(),
        })
    }

    pub fn set_parameters(&mut self, p: impl Serialize) {
        self.parameters = serde_json::to_value(p).expect("parameters serialize");
    }

    /// Records an input file and returns its path.
    pub fn input(&mut self, path: &Path) -> Result<PathBuf> {
        let hash = sha256_file(path)?;
        let (root, rel) = if let Ok(r) = path.strip_prefix(&self.project.out_dir) {
            ("output", portable(r))
        } else if let Ok(r) = path.strip_prefix(&self.project.config_dir) {
            ("config", portable(r))
        } else {
            ("absolute", portable(path))
        };
        self.inputs.insert((root, rel), hash);
        Ok(path.to_path_buf())
    }

    /// Output of `command` that must already exist.
    pub fn upstream(&mut self, command: &'static str, name: &str) -> Result<PathBuf> {
        let path = self.project.out_dir.join(command).join(name);
        if !path.is_file() {
            return Err(CliError::Dependency { command, path });
        }
        self.input(&path)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Registers a file written directly to [`Stage::path`].
    pub fn register(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        self.register(name);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value).expect("outputs serialize");
        buf.push(b'\n');
        self.write_bytes(name, &buf)
    }

    pub fn write_with<E: std::fmt::Display>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), E>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        self.write_bytes(name, &buf)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        self.write_with(name, |buf| -> std::result::Result<(), csv::Error> {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    /// Writes one sidecar per registered output.
    pub fn finish(self) -> Result<()> {
        let inputs: Vec<InputRecord> = self
            .inputs
            .into_iter()
            .map(|((root, path), sha256)| InputRecord { root, path, sha256 })
            .collect();
        for name in &self.outputs {
            let hash = sha256_file(&self.dir.join(name))?;
            let sidecar = Sidecar {
                command: self.command,
                version: VERSION,
                output: name,
                sha256: &hash,
                inputs: &inputs,
                parameters: &self.parameters,
            };
            let p = self.dir.join(format!("{name}.meta.json"));
            let mut f = fs::File::create(&p).map_err(|e| CliError::io(&p, e))?;
            serde_json::to_writer_pretty(&mut f, &sidecar).expect("sidecar serializes");
            f.write_all(b"\n").map_err(|e| CliError::io(&p, e))?;
        }
        log::info!(
            "{}: wrote {} files to {}",
            self.command,
            self.outputs.len(),
            self.dir.display()
        );
        Ok(())
    }
}

/// Shortest round-trip decimal.
pub fn num(v: f64) -> String {
    v.to_string()
}

/// Empty for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
