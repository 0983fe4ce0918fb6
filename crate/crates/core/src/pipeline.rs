//! Request/response wire types and the in-process completion pipeline:
//! cursor context, then masked input, then one decoded line.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backend::{CompletionBackend, DecodeParams, Strategy};
use crate::config::PromptConfig;
use crate::error::{BackendError, PromptError};
use crate::prompt::{build_inference_input, CursorContext, FileMeta, Language};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub request_id: String,
    pub file_path: String,
    pub language: String,
    pub before: String,
    pub after: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

impl CompletionRequest {
    pub fn context(&self) -> Result<CursorContext, CompletionError> {
        if self.request_id.is_empty() {
            return Err(CompletionError::BadRequest("request_id must not be empty".into()));
        }
        let language = Language::new(&self.language).map_err(|e| CompletionError::BadRequest(e.to_string()))?;
        Ok(CursorContext {
            meta: FileMeta {
                file_path: self.file_path.clone(),
                language,
                kernel: self.kernel.clone(),
            },
            before: self.before.clone(),
            after: self.after.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub request_id: String,
    pub completion_text: String,
    pub strategy: Strategy,
    pub model_latency_ms: u64,
    pub input_tokens: usize,
    #[serde(default)]
    pub backend_id: String,
    #[serde(default)]
    pub generated_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompletionError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unknown sample: {0}")]
    NotFound(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("generation deadline exceeded")]
    DeadlineExceeded,
    #[error("internal error: {0}")]
    Internal(String),
}

impl CompletionError {
    /// HTTP status used on the wire.
    pub fn status(&self) -> u16 {
        match self {
            Self::BadRequest(_) => 400,
            Self::NotFound(_) => 404,
            Self::Unavailable(_) => 503,
            Self::DeadlineExceeded => 504,
            Self::Internal(_) => 500,
        }
    }
}

impl From<BackendError> for CompletionError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::UnknownSample(id) => Self::NotFound(id),
            BackendError::InvalidParams(m) => Self::BadRequest(m),
            other => Self::Unavailable(other.to_string()),
        }
    }
}

impl From<PromptError> for CompletionError {
    fn from(e: PromptError) -> Self {
        Self::BadRequest(e.to_string())
    }
}

/// Anything that turns a request into one suggestion: the local pipeline or
/// an HTTP client for a remote service.
pub trait Completer: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError>;
}

impl<C: Completer + ?Sized> Completer for Arc<C> {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        (**self).complete(req)
    }
}

#[derive(Clone)]
pub struct LocalCompleter {
    pub backend: Arc<dyn CompletionBackend>,
    pub prompt: PromptConfig,
    pub decode: DecodeParams,
}

impl LocalCompleter {
    pub fn new(backend: Arc<dyn CompletionBackend>) -> Self {
        Self {
            backend,
            prompt: PromptConfig::default(),
            decode: DecodeParams::default(),
        }
    }
}

impl Completer for LocalCompleter {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        let ctx = req.context()?;
        let input = build_inference_input(&ctx, &self.prompt)?;
        let started = Instant::now();
        let completion = self.backend.generate(&req.request_id, &input, &self.decode)?;
        Ok(CompletionResponse {
            request_id: req.request_id.clone(),
            completion_text: completion.text,
            strategy: completion.strategy,
            model_latency_ms: started.elapsed().as_millis() as u64,
            input_tokens: input.len(),
            backend_id: completion.backend_id,
            generated_tokens: completion.generated_tokens,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::backend::OracleBackend;

    fn req(id: &str, language: &str) -> CompletionRequest {
        CompletionRequest {
            request_id: id.into(),
            file_path: "a.py".into(),
            language: language.into(),
            before: "x = ".into(),
            after: "\n".into(),
            kernel: None,
        }
    }

    #[test]
    fn oracle_pipeline() {
        let oracle = OracleBackend::new(HashMap::from([("r1".to_owned(), "1\n".to_owned())]));
        let c = LocalCompleter::new(Arc::new(oracle));
        let resp = c.complete(&req("r1", "py")).unwrap();
        assert_eq!(resp.request_id, "r1");
        assert_eq!(resp.completion_text, "1\n");
        assert_eq!(resp.strategy, Strategy::Beam { width: 3 });
        assert_eq!(c.complete(&req("r2", "py")).unwrap_err().status(), 404);
    }

    #[test]
    fn empty_language_is_bad_request() {
        let c = LocalCompleter::new(Arc::new(OracleBackend::default()));
        let err = c.complete(&req("r1", "  ")).unwrap_err();
        assert_eq!(err.status(), 400);
    }

    #[test]
    fn request_wire_names() {
        let json = serde_json::to_value(req("r", "py")).unwrap();
        for key in ["request_id", "file_path", "language", "before", "after"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json.get("kernel").is_none());
    }
}
