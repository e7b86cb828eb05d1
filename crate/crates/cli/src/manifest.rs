//! Run manifests. The manifest is a pure function of the resolved
//! configuration; timing lives in a separate file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config: Value,
    /// Output file names, relative to the output directory.
    pub outputs: Vec<String>,
    /// Values computed during the run worth recording (thresholds, sizes).
    #[serde(default)]
    pub derived: Map<String, Value>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("manifest: {e}")))
    }
}

#[derive(Serialize)]
struct Timing {
    duration_seconds: f64,
    threads: usize,
}

/// Collects outputs of one command invocation.
pub struct Run {
    dir: PathBuf,
    outputs: Vec<String>,
    derived: Map<String, Value>,
    start: Instant,
}

impl Run {
    pub fn begin(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            derived: Map::new(),
            start: Instant::now(),
        })
    }

    /// Creates an output file and records its name.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        self.derived
            .insert(key.to_string(), serde_json::to_value(value).expect("serializes"));
    }

    pub fn finish(self, command: &str, config: &impl Serialize) -> Result<(), CliError> {
        let manifest = Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            outputs: self.outputs,
            derived: self.derived,
        };
        write_json(&self.dir.join(MANIFEST_FILE), &manifest)?;
        let timing = Timing {
            duration_seconds: self.start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        };
        write_json(&self.dir.join(TIMING_FILE), &timing)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
