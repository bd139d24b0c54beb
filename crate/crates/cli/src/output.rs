use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::{CliError, CliResult, EXIT_IO};

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io_err = |e: std::io::Error| CliError::new(EXIT_IO, format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Provenance record written next to every output file.
#[derive(Debug)]
pub struct Manifest {
    command: String,
    config: BTreeMap<String, String>,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config: BTreeMap::new(),
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn config(&mut self, snapshot: BTreeMap<String, String>) -> &mut Self {
        self.config.extend(snapshot);
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    /// Writes an output atomically and records it.
    pub fn output(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn output_json(&mut self, path: &Path, value: &Value) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialise");
        text.push('\n');
        self.output(path, text.as_bytes())
    }

    fn to_json(&self) -> Value {
        let paths = |v: &[PathBuf]| v.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
        json!({
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "inputs": paths(&self.inputs),
            "outputs": paths(&self.outputs),
            "tool_version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        })
    }

    /// Writes `<output>.manifest.json` beside each recorded output.
    pub fn finish(&self) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialise");
        text.push('\n');
        for out in &self.outputs {
            let mut name = out.clone().into_os_string();
            name.push(".manifest.json");
            write_atomic(Path::new(&name), text.as_bytes())?;
        }
        Ok(())
    }
}
