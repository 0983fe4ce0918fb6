use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use gw_core::backend::{Completion, CompletionBackend, DecodeParams};
use gw_core::pipeline::{Completer, CompletionError, CompletionRequest, CompletionResponse};
use gw_core::prompt::LcmInput;
use gw_core::BackendError;

use crate::server::{GenerateRequest, Health};

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(timeout).build()
}

/// Maps a transport or HTTP failure to the error the status stands for.
fn call_error(e: ureq::Error) -> CompletionError {
    match e {
        ureq::Error::Status(code, resp) => {
            let msg = resp.into_string().unwrap_or_default();
            match code {
                400 | 413 => CompletionError::BadRequest(msg),
                404 => CompletionError::NotFound(msg),
                504 => CompletionError::DeadlineExceeded,
                503 => CompletionError::Unavailable(msg),
                _ => CompletionError::Internal(format!("HTTP {code}: {msg}")),
            }
        }
        ureq::Error::Transport(t) => CompletionError::Unavailable(t.to_string()),
    }
}

/// Blocking client for a completion service.
#[derive(Clone)]
pub struct HttpCompleter {
    base_url: String,
    agent: ureq::Agent,
}

impl HttpCompleter {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            agent: agent(timeout),
        }
    }

    pub fn health(&self) -> Result<Health, CompletionError> {
        let resp = match self.agent.get(&format!("{}/healthz", self.base_url)).call() {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(e) => return Err(call_error(e)),
        };
        let body = resp.into_string().map_err(|e| CompletionError::Internal(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| CompletionError::Internal(e.to_string()))
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, CompletionError> {
        let body = serde_json::to_string(req).map_err(|e| CompletionError::Internal(e.to_string()))?;
        let resp = self
            .agent
            .post(&format!("{}/v1/completion", self.base_url))
            .set("content-type", "application/json")
            .send_string(&body)
            .map_err(call_error)?;
        let text = resp.into_string().map_err(|e| CompletionError::Unavailable(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| CompletionError::Internal(format!("bad response: {e}")))
    }
}

/// Forwards masked inputs to an upstream `POST /v1/generate`.
pub struct RemoteBackend {
    url: String,
    agent: ureq::Agent,
    reachable: AtomicBool,
}

impl RemoteBackend {
    pub fn new(url: &str, timeout: Duration) -> Self {
        Self {
            url: url.trim_end_matches('/').to_owned(),
            agent: agent(timeout),
            reachable: AtomicBool::new(true),
        }
    }
}

impl CompletionBackend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}", self.url)
    }

    /// False after the last upstream call failed at the transport level.
    fn healthy(&self) -> bool {
        self.reachable.load(Ordering::Relaxed)
    }

    fn generate(&self, request_id: &str, input: &LcmInput, params: &DecodeParams) -> Result<Completion, BackendError> {
        let body = serde_json::to_string(&GenerateRequest {
            request_id: request_id.to_owned(),
            input: input.clone(),
            params: *params,
        })
        .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let result = self
            .agent
            .post(&format!("{}/v1/generate", self.url))
            .set("content-type", "application/json")
            .send_string(&body);
        self.reachable
            .store(!matches!(result, Err(ureq::Error::Transport(_))), Ordering::Relaxed);
        let resp = result.map_err(|e| match e {
            ureq::Error::Status(404, _) => BackendError::UnknownSample(request_id.to_owned()),
            ureq::Error::Status(400, r) => BackendError::InvalidParams(r.into_string().unwrap_or_default()),
            other => BackendError::Unavailable(other.to_string()),
        })?;
        let text = resp.into_string().map_err(|e| BackendError::Unavailable(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| BackendError::Unavailable(format!("bad upstream response: {e}")))
    }
}
