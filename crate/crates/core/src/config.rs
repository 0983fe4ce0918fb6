//! Prompt configuration, loadable from a TOML file with `GW_*` environment
//! overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PromptError;
use crate::tokenize::TriggerSet;

pub const DEFAULT_BUDGET: usize = 2048;
pub const DEFAULT_SPLIT: f64 = 0.7;
pub const DEFAULT_MAX_TARGET_TOKENS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetadataField {
    Language,
    Path,
    Kernel,
}

impl std::str::FromStr for MetadataField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "language" => Ok(Self::Language),
            "path" => Ok(Self::Path),
            "kernel" => Ok(Self::Kernel),
            other => Err(format!("unknown metadata field {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub triggers: TriggerSet,
    pub budget: usize,
    pub split: f64,
    pub max_target_tokens: usize,
    pub metadata_order: Vec<MetadataField>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            triggers: TriggerSet::default(),
            budget: DEFAULT_BUDGET,
            split: DEFAULT_SPLIT,
            max_target_tokens: DEFAULT_MAX_TARGET_TOKENS,
            metadata_order: vec![MetadataField::Language, MetadataField::Path, MetadataField::Kernel],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{key}: {msg}")]
    Env { key: String, msg: String },
    #[error(transparent)]
    Invalid(#[from] PromptError),
}

impl PromptConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` if given, then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => Self::from_toml_str(&std::fs::read_to_string(p)?)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    /// Applies `GW_TRIGGERS`, `GW_BUDGET`, `GW_SPLIT`, `GW_MAX_TARGET_TOKENS`
    /// and `GW_METADATA_ORDER` (comma separated) from `lookup`.
    pub fn apply_env<F>(&mut self, lookup: F) -> Result<(), ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        fn bad(key: &str, msg: impl ToString) -> ConfigError {
            ConfigError::Env {
                key: key.to_owned(),
                msg: msg.to_string(),
            }
        }
        if let Some(v) = lookup("GW_TRIGGERS") {
            self.triggers = v.parse()?;
        }
        if let Some(v) = lookup("GW_BUDGET") {
            self.budget = v.parse().map_err(|e| bad("GW_BUDGET", e))?;
        }
        if let Some(v) = lookup("GW_SPLIT") {
            self.split = v.parse().map_err(|e| bad("GW_SPLIT", e))?;
        }
        if let Some(v) = lookup("GW_MAX_TARGET_TOKENS") {
            self.max_target_tokens = v.parse().map_err(|e| bad("GW_MAX_TARGET_TOKENS", e))?;
        }
        if let Some(v) = lookup("GW_METADATA_ORDER") {
            self.metadata_order = v
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| bad("GW_METADATA_ORDER", e))?;
        }
        self.validate()?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(PromptError::InvalidSplit(self.split));
        }
        if self.triggers.is_empty() {
            return Err(PromptError::InvalidTriggerSet("empty".into()));
        }
        Ok(())
    }
}
