use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, ValueEnum};

use gw_core::backend::{CompletionBackend, DecodeParams, OracleBackend};
use gw_core::config::PromptConfig;
use gw_core::ngram::NGramModel;
use gw_core::pipeline::LocalCompleter;

use crate::client::RemoteBackend;
use crate::server::AppState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Order-k n-gram model from an `NGRM1` file.
    Ngram,
    /// Ground-truth lookup from a JSON object of id to completion.
    Oracle,
    /// Upstream service speaking `POST /v1/generate`.
    Remote,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "gw-serve", version, about = "Serve line-level code completions over HTTP")]
pub struct ServeArgs {
    #[arg(long, env = "GW_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, env = "GW_BACKEND", value_enum, default_value = "ngram")]
    pub backend: BackendKind,
    /// Model file for `ngram`, truth JSON for `oracle`.
    #[arg(long, env = "GW_MODEL_PATH")]
    pub model_path: Option<PathBuf>,
    /// Upstream base URL for `remote`.
    #[arg(long, env = "GW_REMOTE_URL")]
    pub remote_url: Option<String>,
    /// Prompt settings (TOML); flags below override it.
    #[arg(long, env = "GW_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "GW_BUDGET")]
    pub budget: Option<usize>,
    #[arg(long, env = "GW_SPLIT")]
    pub split: Option<f64>,
    #[arg(long, env = "GW_BEAM_THRESHOLD", default_value_t = gw_core::backend::DEFAULT_BEAM_THRESHOLD)]
    pub beam_threshold: usize,
    #[arg(long, env = "GW_BEAM_WIDTH", default_value_t = gw_core::backend::DEFAULT_BEAM_WIDTH)]
    pub beam_width: usize,
    #[arg(long, env = "GW_MAX_NEW_TOKENS", default_value_t = gw_core::backend::DEFAULT_MAX_NEW_TOKENS)]
    pub max_new_tokens: usize,
    #[arg(long, env = "GW_DEADLINE_MS", default_value_t = 1000)]
    pub deadline_ms: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error("--model-path is required for the {0:?} backend")]
    MissingModel(BackendKind),
    #[error("--remote-url is required for the remote backend")]
    MissingRemote,
    #[error("loading model: {0}")]
    Model(#[from] gw_core::ModelFileError),
    #[error("loading oracle truth: {0}")]
    Oracle(String),
    #[error(transparent)]
    Config(#[from] gw_core::config::ConfigError),
    #[error(transparent)]
    Invalid(#[from] gw_core::PromptError),
    #[error(transparent)]
    Decode(#[from] gw_core::BackendError),
}

impl ServeArgs {
    pub fn prompt_config(&self) -> Result<PromptConfig, SetupError> {
        let mut cfg = match &self.config {
            Some(p) => PromptConfig::from_toml_str(
                &std::fs::read_to_string(p).map_err(gw_core::config::ConfigError::from)?,
            )?,
            None => PromptConfig::default(),
        };
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(s) = self.split {
            cfg.split = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn decode_params(&self) -> Result<DecodeParams, SetupError> {
        let p = DecodeParams {
            max_new_tokens: self.max_new_tokens,
            beam_threshold_tokens: self.beam_threshold,
            beam_width: self.beam_width,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn backend(&self) -> Result<Arc<dyn CompletionBackend>, SetupError> {
        let model_path = || self.model_path.as_deref().ok_or(SetupError::MissingModel(self.backend));
        Ok(match self.backend {
            BackendKind::Ngram => Arc::new(NGramModel::load(model_path()?)?),
            BackendKind::Oracle => {
                let text = std::fs::read_to_string(model_path()?).map_err(|e| SetupError::Oracle(e.to_string()))?;
                Arc::new(OracleBackend::from_json(&text).map_err(|e| SetupError::Oracle(e.to_string()))?)
            }
            BackendKind::Remote => {
                let url = self.remote_url.as_deref().ok_or(SetupError::MissingRemote)?;
                Arc::new(RemoteBackend::new(url, Duration::from_millis(self.deadline_ms)))
            }
        })
    }

    pub fn state(&self) -> Result<AppState, SetupError> {
        let completer = LocalCompleter {
            backend: self.backend()?,
            prompt: self.prompt_config()?,
            decode: self.decode_params()?,
        };
        let mut state = AppState::new(completer);
        state.deadline = Duration::from_millis(self.deadline_ms);
        Ok(state)
    }
}
