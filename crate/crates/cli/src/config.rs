//! Run configuration: a TOML file with `[tracker]`, `[filter]`,
//! `[metrics]`, and `[io]` sections, every key optional. Validation
//! errors name the full key so a bad value is a one-line fix.

use dstrack_core::filter::NoiseConfig;
use dstrack_core::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable consulted when no `--config` flag is given.
pub const CONFIG_ENV: &str = "DSTRACK_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error("{msg}")]
    Invalid { msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub match_iou: f64,
}

impl MetricsSection {
    fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.match_iou) || self.match_iou.is_nan() {
            return Err(format!("match_iou = {} outside [0, 1]", self.match_iou));
        }
        Ok(())
    }
}

impl MetricsSection {
    fn default_match_iou() -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    /// Default detections path for `track` when the flag is omitted.
    pub detections: Option<PathBuf>,
    /// Default output path for `track` when the flag is omitted.
    pub out: Option<PathBuf>,
    /// Worker threads for multi-video runs.
    pub workers: usize,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { detections: None, out: None, workers: 1 }
    }
}

impl IoSection {
    fn validate(&self) -> Result<(), String> {
        if self.workers == 0 {
            return Err(String::from("workers must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub filter: NoiseConfig,
    pub metrics: MetricsSection,
    pub io: IoSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            filter: NoiseConfig::default(),
            metrics: MetricsSection { match_iou: MetricsSection::default_match_iou() },
            io: IoSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_owned(), source: e })?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.to_owned(), msg: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves the effective config: the `--config` flag wins, then the
    /// `DSTRACK_CONFIG` environment variable, then defaults.
    pub fn resolve(flag: Option<&Path>) -> Result<Self, ConfigError> {
        if let Some(path) = flag {
            return Self::load(path);
        }
        if let Some(path) = std::env::var_os(CONFIG_ENV) {
            return Self::load(Path::new(&path));
        }
        Ok(Self::default())
    }

    /// Checks every section; errors carry the section-qualified key name.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn prefixed(section: &str, r: Result<(), String>) -> Result<(), ConfigError> {
            r.map_err(|msg| ConfigError::Invalid { msg: format!("{section}.{msg}") })
        }
        prefixed("tracker", self.tracker.validate())?;
        prefixed("filter", self.filter.validate())?;
        prefixed("metrics", self.metrics.validate())?;
        prefixed("io", self.io.validate())?;
        Ok(())
    }
}
