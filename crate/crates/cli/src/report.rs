use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Summary written as `report.json` by every command.
///
/// `config` is the fully resolved settings; passing the report itself back
/// via `--config` repeats the run. Everything under `results` is a pure
/// function of `config` on a given build; `wall_clock_secs` is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    pub outputs: BTreeMap<String, PathBuf>,
    pub wall_clock_secs: f64,
}

pub struct ReportBuilder {
    command: &'static str,
    seed: u64,
    config: serde_json::Value,
    outputs: BTreeMap<String, PathBuf>,
    started: Instant,
}

impl ReportBuilder {
    pub fn new(command: &'static str, seed: u64, config: &impl Serialize) -> CliResult<Self> {
        Ok(Self {
            command,
            seed,
            config: serde_json::to_value(config).map_err(otmap::Error::from)?,
            outputs: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.to_path_buf());
    }

    /// Writes `report.json` into `dir` and returns the report.
    pub fn finish(mut self, dir: &Path, results: serde_json::Value) -> CliResult<Report> {
        let path = dir.join("report.json");
        self.output("report", &path);
        let report = Report {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            results,
            outputs: self.outputs,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&report).map_err(otmap::Error::from)?;
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        Ok(report)
    }
}

pub fn read_report(path: &Path) -> CliResult<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text).map_err(otmap::Error::from)?)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
