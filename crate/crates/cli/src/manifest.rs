use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything needed to rerun a command: its configuration, seeds, files and version.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub timings: Vec<StageTiming>,
    pub results: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: serde_json::Value::Null,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: Vec::new(),
            results: serde_json::Map::new(),
        }
    }

    pub fn config(&mut self, config: &impl Serialize) -> CliResult<()> {
        self.config = to_value(config)?;
        Ok(())
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.into(), seed);
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), path.to_path_buf());
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.into(), path.to_path_buf());
    }

    pub fn result(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        self.results.insert(name.into(), to_value(value)?);
        Ok(())
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let started = Instant::now();
        let out = f();
        self.timings.push(StageTiming { stage: stage.into(), seconds: started.elapsed().as_secs_f64() });
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self).map_err(CliError::runtime)?;
        std::fs::write(path, json + "\n").map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
    }
}

fn to_value(value: &impl Serialize) -> CliResult<serde_json::Value> {
    serde_json::to_value(value).map_err(CliError::runtime)
}

/// `out.ply` -> `out.manifest.json`, next to the output.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}
