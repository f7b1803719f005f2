use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spinboson::bath::{correlation_expansion, BathExpansion};
use spinboson::ModelConfig;

use crate::error::CliResult;

/// Everything needed to rerun a command: the exact configuration, the code
/// version, the bath expansions used, sizes, timings and the files written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    /// Absent only when the configuration itself failed to load.
    pub config: Option<ModelConfig>,
    pub expansions: Vec<BathExpansion>,
    pub hierarchy_size: Option<usize>,
    pub supersystem_dim: Option<usize>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    /// Scalar results of the command.
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub status: String,
    pub error: Option<String>,
    pub exit_code: i32,
}

impl RunRecord {
    pub fn new(command: &str, args: Vec<String>, config: Option<&ModelConfig>) -> Self {
        let expansions = config
            .map(|c| {
                [&c.bath1, &c.bath2]
                    .iter()
                    .filter_map(|b| correlation_expansion(b, c.numerics.k, c.numerics.scheme).ok())
                    .collect()
            })
            .unwrap_or_default();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args,
            config: config.cloned(),
            expansions,
            hierarchy_size: None,
            supersystem_dim: None,
            timings: BTreeMap::new(),
            outputs: Vec::new(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
            status: "running".to_string(),
            error: None,
            exit_code: 0,
        }
    }

    /// Runs `f`, recording its wall time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(phase.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
