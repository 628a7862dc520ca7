//! Run manifests, metrics, and file emission helpers.

use crate::error::CliResult;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Fully resolved description of one experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    /// Resolved configuration, stringly typed for stable diffs.
    pub config: BTreeMap<String, String>,
    /// Wall-clock phase timings in seconds; informational only and excluded
    /// from reproducibility comparisons.
    pub timings_s: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: BTreeMap::new(),
            timings_s: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }
}

/// Collects named numeric results for metrics.json.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Metrics(pub BTreeMap<String, f64>);

impl Metrics {
    pub fn put(&mut self, key: &str, value: f64) {
        self.0.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }
}

/// Simple phase timer feeding the manifest.
pub struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
        }
    }

    pub fn lap(&mut self) -> f64 {
        let elapsed = self.start.elapsed().as_secs_f64();
        self.start = Instant::now();
        elapsed
    }
}

/// Output directory handle; creates the directory up front.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| crate::error::CliError::runtime(format!("serializing {name}: {e}")))?;
        std::fs::write(self.path(name), text + "\n")?;
        Ok(())
    }
}
