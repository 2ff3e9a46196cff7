//! Config-file merge: every subcommand takes `--config file.json` with the
//! same keys as its flags; explicit flags override config values.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::CliError;

/// Parsed config file (empty when no `--config` was given).
pub struct Config {
    values: Map<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self { values: Map::new() });
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("malformed config {}: {e}", path.display()))
        })?;
        match value {
            Value::Object(values) => Ok(Self { values }),
            _ => Err(CliError::Usage(format!(
                "config {} must be a JSON object",
                path.display()
            ))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| CliError::Usage(format!("config key {key:?} must be a number"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|n| Some(n as usize))
                .ok_or_else(||

                    CliError::Usage(format!("config key {key:?} must be a nonnegative integer"))
                ),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(PathBuf::from(s)))
                .ok_or_else(|| CliError::Usage(format!("config key {key:?} must be a string"))),
        }
    }

    /// Weights may be a JSON array of numbers or the same comma-separated
    /// string the flag takes.
    pub fn weights(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Array(items)) => {
                let nums: Option<Vec<String>> = items
                    .iter()
                    .map(|v| v.as_f64().map(|f| f.to_string()))
                    .collect();
                nums.map(|n| Some(n.join(","))).ok_or_else(|| {
                    CliError::Usage(format!("config key {key:?} must hold numbers"))
                })
            }
            Some(_) => Err(CliError::Usage(format!(
                "config key {key:?} must be a string or array of numbers"
            ))),
        }
    }
}

/// Flag value if present, else config value, else a usage error.
pub fn require<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(config)
        .ok_or_else(|| CliError::Usage(format!("missing required --{name} (flag or config key)")))
}
