use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::inputs::{sha256_hex, InputRecord};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance for one output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// sha256 of the configuration file, or of the effective configuration
    /// JSON when none was given.
    pub config_hash: String,
    pub inputs: Vec<InputRecord>,
    pub seed: u64,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub outputs: Vec<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config_hash: String, inputs: Vec<InputRecord>) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            config_hash,
            inputs,
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now(),
            finished_at: None,
            outputs: Vec::new(),
        }
    }

    pub fn hash_config_json<T: Serialize>(cfg: &T) -> String {
        sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

/// An output directory whose manifest is on disk before any output is.
pub struct OutputDir {
    dir: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: RunManifest) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        manifest.write(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Registers `name` as an output and returns its full path.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.output(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(value).expect("output serializes");
        self.write_text(name, &(text + "\n"))
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<PathBuf> {
        let mut text = String::new();
        for row in rows {
            text.push_str(&serde_json::to_string(row).expect("row serializes"));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    pub fn csv_writer(&mut self, name: &str) -> CliResult<csv::Writer<fs::File>> {
        let path = self.output(name);
        csv::Writer::from_path(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn finish(mut self) -> CliResult<RunManifest> {
        self.manifest.finished_at = Some(now());
        self.manifest.write(&self.dir)?;
        Ok(self.manifest)
    }
}
