//! Flat key=value experiment configuration.
//!
//! A config is assembled in three layers: built-in defaults, an optional
//! config file (one `key = value` per line, `#` comments), and command-line
//! overrides. Every key consumed by an experiment is tracked; leftover keys
//! are reported as configuration errors so typos cannot silently fall back
//! to defaults.

use crate::error::{CliError, CliResult};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
    consumed: BTreeSet<String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut map = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!(
                    "{}:{}: expected key = value, got '{raw}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            map.set(key.trim(), value.trim());
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    /// Apply a `key=value` override string.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override must be key=value, got '{pair}'")))?;
        self.set(key.trim(), value.trim());
        Ok(())
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.values.get(key).cloned()
    }

    pub fn get_str(&mut self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or_else(|| default.to_string())
    }

    pub fn get_opt_str(&mut self, key: &str) -> Option<String> {
        self.raw(key)
    }

    pub fn get_f64(&mut self, key: &str, default: f64) -> CliResult<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::config(format!("{key}: expected a number, got '{s}'"))),
        }
    }

    pub fn get_usize(&mut self, key: &str, default: usize) -> CliResult<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::config(format!("{key}: expected an integer, got '{s}'"))),
        }
    }

    pub fn get_u64(&mut self, key: &str, default: u64) -> CliResult<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| CliError::config(format!("{key}: expected an integer, got '{s}'"))),
        }
    }

    pub fn get_bool(&mut self, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => match s.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(CliError::config(format!(
                    "{key}: expected true/false, got '{other}'"
                ))),
            },
        }
    }

    pub fn get_usize_list(&mut self, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim().parse().map_err(|_| {
                        CliError::config(format!("{key}: expected integers, got '{tok}'"))
                    })
                })
                .collect(),
        }
    }

    /// Error out if any provided key was never consumed.
    pub fn finish(&self) -> CliResult<()> {
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!(
                "unknown configuration keys: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

/// Which estimator(s) an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Map,
    Gibbs,
    Filter,
}

impl Estimator {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "map" => Ok(Estimator::Map),
            "gibbs" => Ok(Estimator::Gibbs),
            "filter" | "deterministic" => Ok(Estimator::Filter),
            other => Err(CliError::config(format!(
                "estimator must be map, gibbs, or filter; got '{other}'"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Map => "map",
            Estimator::Gibbs => "gibbs",
            Estimator::Filter => "filter",
        }
    }
}
