//! Optional TOML config file. Every key is optional; command-line flags win
//! over file values, which win over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub stemmer: Option<String>,
    pub index: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub assessments: Option<PathBuf>,
    pub predictors: Option<PathBuf>,
    pub triplets: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub mode: Option<String>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub rerank_depth: Option<usize>,
    pub threshold: Option<usize>,
    pub cutoff: Option<usize>,
    pub method: Option<String>,
    pub kind: Option<String>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub trees: Option<usize>,
    pub top_n: Option<usize>,
    pub resample: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// First of flag and file value, or an error naming the missing option.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).with_context(|| {
        format!(
            "missing required option --{name} (flag or config key `{}`)",
            name.replace('-', "_")
        )
    })
}

/// Parses a string option given either on the command line or in the file.
pub fn parse_opt<T>(flag: Option<T>, file: Option<&str>, default: T) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match file {
        Some(s) => s
            .parse()
            .map_err(|e: T::Err| anyhow::anyhow!("config value `{s}`: {e}")),
        None => Ok(default),
    }
}
