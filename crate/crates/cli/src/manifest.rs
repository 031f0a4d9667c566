use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use icflow::grid::GridSpec;
use icflow::io::write_json;

/// Provenance record written next to every output file as `<file>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub config: Value,
    pub version: &'static str,
    pub grid: GridSpec,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
}

pub struct Run {
    command: &'static str,
    inputs: Vec<PathBuf>,
    config: Value,
    started: Instant,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn start(command: &'static str, inputs: &[&Path], config: Value) -> Run {
        Run {
            command,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            config,
            started: Instant::now(),
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn finish(self, grid: GridSpec) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            inputs: self.inputs,
            config: self.config,
            version: env!("CARGO_PKG_VERSION"),
            grid,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.clone(),
        };
        for out in &self.outputs {
            let mut name = out.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            write_json(&out.with_file_name(name), &manifest)?;
        }
        Ok(())
    }
}
