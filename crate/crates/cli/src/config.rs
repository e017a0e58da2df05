//! Flat JSON configuration. Every key may be overridden by an environment
//! variable named `INKCHECK_` plus the upper-cased key, e.g.
//! `INKCHECK_STORE_ROOT` or `INKCHECK_PAUSE_THRESHOLD_S`.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use inkcheck_core::Thresholds;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const ENV_PREFIX: &str = "INKCHECK_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CliConfig {
    pub store_root: PathBuf,
    /// NDJSON over TCP.
    pub listen: SocketAddr,
    /// HTTP views and the WebSocket binding.
    pub http_listen: SocketAddr,
    pub feature_format: FeatureFormat,
    #[serde(flatten)]
    pub thresholds: Thresholds,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            store_root: PathBuf::from("inkcheck-store"),
            listen: ([127, 0, 0, 1], 7878).into(),
            http_listen: ([127, 0, 0, 1], 7879).into(),
            feature_format: FeatureFormat::Csv,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config is not a JSON object")]
    NotAnObject,
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl CliConfig {
    /// Every accepted key, in sorted order.
    pub fn keys() -> BTreeSet<String> {
        match serde_json::to_value(CliConfig::default()) {
            Ok(Value::Object(m)) => m.keys().cloned().collect(),
            _ => unreachable!("config serializes to an object"),
        }
    }

    /// Loads `path` (defaults when absent) and applies overrides from `env`.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                match serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(e.to_string()))? {
                    Value::Object(m) => m,
                    _ => return Err(ConfigError::NotAnObject),
                }
            }
            None => Map::new(),
        };
        let keys = Self::keys();
        if let Some(k) = map.keys().find(|k| !keys.contains(*k)) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        for (name, raw) in env {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            if !keys.contains(&key) {
                continue;
            }
            // Numbers and booleans parse as JSON; anything else is a string.
            let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
            map.insert(key, value);
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn from_env(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::load(path, std::env::vars())
    }
}
