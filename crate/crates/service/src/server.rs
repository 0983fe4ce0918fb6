use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use gw_core::backend::{Completion, DecodeParams};
use gw_core::pipeline::{Completer, CompletionError, CompletionRequest, LocalCompleter};
use gw_core::prompt::LcmInput;

pub const MAX_BODY_BYTES: usize = 1 << 20;

#[derive(Clone)]
pub struct AppState {
    pub completer: Arc<LocalCompleter>,
    /// Per-request generation deadline.
    pub deadline: Duration,
}

impl AppState {
    pub fn new(completer: LocalCompleter) -> Self {
        Self {
            completer: Arc::new(completer),
            deadline: Duration::from_millis(1000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub backend: String,
    pub fingerprint: String,
}

/// Body of `POST /v1/generate`, the upstream generation call used by the
/// `remote` backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub request_id: String,
    pub input: LcmInput,
    pub params: DecodeParams,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    request_id: Option<&'a str>,
}

fn error_response(e: &CompletionError, request_id: Option<&str>) -> Response {
    let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let body = ErrorBody {
        error: e.to_string(),
        request_id,
    };
    (status, Json(body)).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/completion", post(completion))
        .route("/v1/generate", post(generate))
        .route("/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Runs blocking work off the async workers, bounded by `deadline`.
async fn run_blocking<T, F>(deadline: Duration, f: F) -> Result<T, CompletionError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, CompletionError> + Send + 'static,
{
    match tokio::time::timeout(deadline, tokio::task::spawn_blocking(f)).await {
        Err(_) => Err(CompletionError::DeadlineExceeded),
        Ok(Err(join)) => Err(CompletionError::Internal(join.to_string())),
        Ok(Ok(r)) => r,
    }
}

async fn completion(State(state): State<AppState>, body: Bytes) -> Response {
    let req: CompletionRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(&CompletionError::BadRequest(e.to_string()), None),
    };
    let completer = state.completer.clone();
    let id = req.request_id.clone();
    match run_blocking(state.deadline, move || completer.complete(&req)).await {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => {
            tracing::warn!(request_id = %id, error = %e, "completion failed");
            error_response(&e, Some(&id))
        }
    }
}

async fn generate(State(state): State<AppState>, body: Bytes) -> Response {
    let req: GenerateRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(&CompletionError::BadRequest(e.to_string()), None),
    };
    let backend = state.completer.backend.clone();
    let id = req.request_id.clone();
    let result = run_blocking(state.deadline, move || -> Result<Completion, CompletionError> {
        Ok(backend.generate(&req.request_id, &req.input, &req.params)?)
    })
    .await;
    match result {
        Ok(c) => Json(c).into_response(),
        Err(e) => error_response(&e, Some(&id)),
    }
}

async fn healthz(State(state): State<AppState>) -> Response {
    let backend = &state.completer.backend;
    let healthy = backend.healthy();
    let health = Health {
        status: if healthy { "ok" } else { "degraded" }.into(),
        backend: backend.id().to_owned(),
        fingerprint: backend.fingerprint(),
    };
    let status = if healthy { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
    (status, Json(health)).into_response()
}
