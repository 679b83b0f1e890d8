use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Written next to every command's outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            started: Instant::now(),
            manifest: RunManifest {
                command: command.to_string(),
                config: serde_json::Value::Null,
                seeds: serde_json::Value::Null,
                inputs: Vec::new(),
                outputs: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                wall_clock_seconds: 0.0,
            },
        }
    }

    pub fn config(&mut self, config: serde_json::Value) -> &mut Self {
        self.manifest.config = config;
        self
    }

    pub fn seeds(&mut self, seeds: serde_json::Value) -> &mut Self {
        self.manifest.seeds = seeds;
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.manifest.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.manifest.outputs.push(path.to_path_buf());
        self
    }

    pub fn write(mut self, dir: &Path) -> CliResult<()> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&self.manifest).map_err(cdfnet::Error::from)?;
        fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }
}

/// The `config` entry of a manifest in `dir`, if there is one.
pub fn read_config(dir: &Path) -> Option<serde_json::Value> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME)).ok()?;
    let m: RunManifest = serde_json::from_str(&text).ok()?;
    Some(m.config)
}
