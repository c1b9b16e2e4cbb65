//! Service configuration file (TOML).
//!
//! ```toml
//! http_addr = "127.0.0.1:8080"
//! telemetry_addr = "127.0.0.1:7070"
//! ring_capacity = 10000
//! staleness_timeout_s = 10
//! log_path = "telemetry.log"
//!
//! [predictor]
//! capacity = 8
//!
//! [tokens]
//! "demo-token" = "probe-1"
//! ```

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use smartcook_core::doneness::DonenessTable;
use smartcook_core::intent::InteractionModel;
use smartcook_core::predictor::PredictorConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub http_addr: SocketAddr,
    pub telemetry_addr: SocketAddr,
    pub ring_capacity: usize,
    pub staleness_timeout_s: f64,
    pub log_path: Option<PathBuf>,
    /// Doneness knowledge file; the shipped table when absent.
    pub kb_path: Option<PathBuf>,
    /// Interaction model; the shipped model plus its extensions when absent.
    pub model_path: Option<PathBuf>,
    /// Static assets served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
    pub predictor: PredictorConfig,
    pub tokens: BTreeMap<String, String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            http_addr: ([127, 0, 0, 1], 8080).into(),
            telemetry_addr: ([127, 0, 0, 1], 7070).into(),
            ring_capacity: 10_000,
            staleness_timeout_s: 10.0,
            log_path: None,
            kb_path: None,
            model_path: None,
            ui_dir: None,
            predictor: PredictorConfig::default(),
            tokens: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: &str| {
            Err(ConfigError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if self.ring_capacity == 0 {
            return invalid("ring_capacity", "must be at least 1");
        }
        if !(self.staleness_timeout_s > 0.0 && self.staleness_timeout_s.is_finite()) {
            return invalid("staleness_timeout_s", "must be a positive number of seconds");
        }
        if self.predictor.capacity < 2 {
            return invalid("predictor.capacity", "must be at least 2");
        }
        if self.predictor.min_samples < 2 || self.predictor.min_samples > self.predictor.capacity {
            return invalid("predictor.min_samples", "must be between 2 and predictor.capacity");
        }
        if !(self.predictor.rate_floor_f_per_s >= 0.0) {
            return invalid("predictor.rate_floor_f_per_s", "must be non-negative");
        }
        if self.tokens.iter().any(|(t, d)| t.is_empty() || d.is_empty()) {
            return invalid("tokens", "tokens and device ids must be non-empty");
        }
        Ok(())
    }

    pub fn staleness_ms(&self) -> u64 {
        (self.staleness_timeout_s * 1000.0).round() as u64
    }

    pub fn doneness_table(&self) -> Result<DonenessTable, ConfigError> {
        match &self.kb_path {
            None => Ok(DonenessTable::default()),
            Some(path) => {
                let text = read(path)?;
                DonenessTable::load(&text).map_err(|e| ConfigError::Invalid {
                    field: "kb_path",
                    reason: e.to_string(),
                })
            }
        }
    }

    pub fn interaction_model(&self) -> Result<InteractionModel, ConfigError> {
        let result = match &self.model_path {
            None => InteractionModel::load_with_extensions(
                smartcook_core::INTERACTION_MODEL,
                &[smartcook_core::UTTERANCE_EXTENSIONS],
            ),
            Some(path) => InteractionModel::load(&read(path)?),
        };
        result.map_err(|e| ConfigError::Invalid {
            field: "model_path",
            reason: e.to_string(),
        })
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}
