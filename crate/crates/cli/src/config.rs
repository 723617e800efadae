//! Optional JSON config file backing the CLI flags. Flags always win; the
//! file only fills in values the user did not pass.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ua_db: Option<PathBuf>,
    pub format: Option<String>,
    pub timeout: Option<f64>,
    pub agent_mode: Option<String>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub data_scaled_priors: Option<bool>,
    pub pool_size: Option<u32>,
    pub session_cap: Option<u64>,
    pub clf_epoch: Option<i64>,
    pub policies: Option<Vec<String>>,
    pub capacities: Option<Vec<usize>>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value if given, else config value, else the default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value if given, else config value.
pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
