use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use clap::Parser;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::io::{AsyncRead, AsyncWrite, BufReader};
use tokio::sync::mpsc;

use gw_core::orchestrator::{Clock, Orchestrator, OrchestratorConfig, Poll, Position, TextChange};
use gw_core::pipeline::{Completer, CompletionError};
use gw_core::telemetry::EventLog;

use crate::transport::{read_message, write_message};

const PARSE_ERROR: i64 = -32700;
const INVALID_REQUEST: i64 = -32600;
const METHOD_NOT_FOUND: i64 = -32601;
const INVALID_PARAMS: i64 = -32602;
const SERVER_NOT_INITIALIZED: i64 = -32002;

#[derive(Debug, Clone, Parser)]
#[command(name = "gw-lsp", version, about = "Inline code completion language server (stdio)")]
pub struct LspArgs {
    #[arg(long, env = "GW_SERVICE_URL", default_value = "http://127.0.0.1:8080")]
    pub service_url: String,
    #[arg(long, env = "GW_DEBOUNCE_MS", default_value_t = gw_core::orchestrator::DEFAULT_DEBOUNCE_MS)]
    pub debounce_ms: u64,
    #[arg(long, env = "GW_CACHE_CAPACITY", default_value_t = gw_core::orchestrator::DEFAULT_CACHE_CAPACITY)]
    pub cache_capacity: usize,
    #[arg(long, env = "GW_MIN_DISPLAY_MS", default_value_t = gw_core::telemetry::DEFAULT_MIN_DISPLAY_MS)]
    pub min_display_ms: u64,
    /// NDJSON file that suggestion events are appended to.
    #[arg(long, env = "GW_TELEMETRY_LOG")]
    pub telemetry_log: Option<PathBuf>,
    /// Prompt settings (TOML), applied before `GW_*` environment overrides.
    #[arg(long, env = "GW_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "GW_REQUEST_TIMEOUT_MS", default_value_t = 2000)]
    pub request_timeout_ms: u64,
}

impl LspArgs {
    pub fn orchestrator_config(&self) -> Result<OrchestratorConfig, gw_core::config::ConfigError> {
        Ok(OrchestratorConfig {
            debounce_ms: self.debounce_ms,
            cache_capacity: self.cache_capacity,
            min_display_ms: self.min_display_ms,
            prompt: gw_core::config::PromptConfig::load(self.config.as_deref())?,
            ..OrchestratorConfig::default()
        })
    }
}

pub struct ServerOptions {
    pub config: OrchestratorConfig,
    pub completer: Arc<dyn Completer>,
    pub telemetry: Arc<EventLog>,
    pub clock: Arc<dyn Clock>,
}

struct Shared {
    orch: Mutex<Orchestrator>,
    completer: Arc<dyn Completer>,
    clock: Arc<dyn Clock>,
    out: mpsc::UnboundedSender<Value>,
}

impl Shared {
    fn orch(&self) -> MutexGuard<'_, Orchestrator> {
        self.orch.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn send(&self, msg: Value) {
        // the writer only goes away once the client is gone
        let _ = self.out.send(msg);
    }

    fn reply(&self, id: Value, result: Value) {
        self.send(json!({"jsonrpc": "2.0", "id": id, "result": result}));
    }

    fn reply_error(&self, id: Value, code: i64, message: impl Into<String>) {
        self.send(json!({"jsonrpc": "2.0", "id": id, "error": {"code": code, "message": message.into()}}));
    }

    fn warn_client(&self, message: String) {
        tracing::warn!("{message}");
        self.send(json!({"jsonrpc": "2.0", "method": "window/logMessage", "params": {"type": 2, "message": message}}));
    }
}

#[derive(Deserialize)]
struct DocumentId {
    uri: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct OpenDocument {
    uri: String,
    language_id: String,
    version: i64,
    text: String,
}

#[derive(Deserialize)]
struct VersionedDocument {
    uri: String,
    version: i64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DidOpen {
    text_document: OpenDocument,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DidChange {
    text_document: VersionedDocument,
    content_changes: Vec<TextChange>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DidClose {
    text_document: DocumentId,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PositionParams {
    text_document: DocumentId,
    position: Position,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Received {
    request_id: String,
    client_timestamp_ms: u64,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Accepted {
    request_id: String,
}

fn params<T: serde::de::DeserializeOwned>(msg: &Value) -> Result<T, String> {
    serde_json::from_value(msg.get("params").cloned().unwrap_or(Value::Null)).map_err(|e| e.to_string())
}

/// Serves one client until `exit` or EOF.
pub async fn run<R, W>(reader: R, writer: W, opts: ServerOptions) -> std::io::Result<()>
where
    R: AsyncRead + Unpin,
    W: AsyncWrite + Unpin + Send + 'static,
{
    let (tx, mut rx) = mpsc::unbounded_channel::<Value>();
    let writer_task = tokio::spawn(async move {
        let mut writer = writer;
        while let Some(msg) = rx.recv().await {
            write_message(&mut writer, &msg).await?;
        }
        Ok::<_, std::io::Error>(())
    });
    let shared = Arc::new(Shared {
        orch: Mutex::new(Orchestrator::new(opts.config, opts.telemetry)),
        completer: opts.completer,
        clock: opts.clock,
        out: tx,
    });

    let mut reader = BufReader::new(reader);
    let mut initialized = false;
    let mut shut_down = false;
    loop {
        let msg = match read_message(&mut reader).await {
            Ok(Some(m)) => m,
            Ok(None) => break,
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                shared.reply_error(Value::Null, PARSE_ERROR, e.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let method = msg.get("method").and_then(Value::as_str).unwrap_or_default().to_owned();
        let id = msg.get("id").cloned();
        if method == "exit" {
            break;
        }
        let Some(id) = id else {
            if initialized && !shut_down {
                notification(&shared, &method, &msg);
            }
            continue;
        };
        if method.is_empty() {
            // a response to something we never send
            continue;
        }
        if shut_down {
            shared.reply_error(id, INVALID_REQUEST, "server is shut down");
            continue;
        }
        match method.as_str() {
            "initialize" => {
                let session = msg.pointer("/params/initializationOptions/sessionId").and_then(Value::as_str);
                shared.orch().set_session_id(session.map(str::to_owned));
                initialized = true;
                shared.reply(
                    id,
                    json!({
                        "capabilities": {
                            "textDocumentSync": {"openClose": true, "change": 2},
                            "inlineCompletionProvider": {},
                        },
                        "serverInfo": {"name": "gw-lsp", "version": env!("CARGO_PKG_VERSION")},
                    }),
                );
            }
            _ if !initialized => shared.reply_error(id, SERVER_NOT_INITIALIZED, "initialize first"),
            "shutdown" => {
                shut_down = true;
                shared.reply(id, Value::Null);
            }
            "textDocument/inlineCompletions" | "textDocument/inlineCompletion" => match params::<PositionParams>(&msg) {
                Ok(p) => {
                    tokio::spawn(inline_completion(shared.clone(), id, p));
                }
                Err(e) => shared.reply_error(id, INVALID_PARAMS, e),
            },
            _ => shared.reply_error(id, METHOD_NOT_FOUND, format!("unknown method {method}")),
        }
    }
    drop(shared);
    // in-flight completions finish within the client timeout and release the writer
    match tokio::time::timeout(Duration::from_secs(5), writer_task).await {
        Ok(Ok(r)) => r,
        Ok(Err(join)) => Err(std::io::Error::other(join)),
        Err(_) => Ok(()),
    }
}

fn notification(shared: &Shared, method: &str, msg: &Value) {
    let now = shared.clock.now_ms();
    let outcome = match method {
        "textDocument/didOpen" => params::<DidOpen>(msg).map(|p| {
            let d = p.text_document;
            shared.orch().did_open(&d.uri, &d.language_id, d.text, d.version);
        }),
        "textDocument/didChange" => params::<DidChange>(msg).and_then(|p| {
            shared
                .orch()
                .did_change(&p.text_document.uri, p.text_document.version, &p.content_changes, now)
                .map(drop)
                .map_err(|e| e.to_string())
        }),
        "textDocument/didClose" => params::<DidClose>(msg).map(|p| shared.orch().did_close(&p.text_document.uri, now)),
        "cc/received" => params::<Received>(msg).and_then(|p| {
            shared
                .orch()
                .cc_received(&p.request_id, p.client_timestamp_ms)
                .map(drop)
                .map_err(|e| e.to_string())
        }),
        "cc/accepted" => params::<Accepted>(msg)
            .and_then(|p| shared.orch().cc_accepted(&p.request_id, now).map_err(|e| e.to_string())),
        _ => Ok(()),
    };
    if let Err(e) = outcome {
        shared.warn_client(format!("{method}: {e}"));
    }
}

async fn inline_completion(shared: Arc<Shared>, id: Value, p: PositionParams) {
    let uri = p.text_document.uri;
    let started = shared.clock.now_ms();
    let (request_id, mut poll) = match shared.orch().request_completion(&uri, p.position, started) {
        Ok(r) => r,
        Err(e) => return shared.reply_error(id, INVALID_PARAMS, e.to_string()),
    };
    let item = loop {
        match poll {
            Poll::Wait { until_ms } => {
                let wait = until_ms.saturating_sub(shared.clock.now_ms());
                tokio::time::sleep(Duration::from_millis(wait)).await;
                poll = shared.orch().poll(&request_id, shared.clock.now_ms());
            }
            Poll::Dispatch(req) => {
                let completer = shared.completer.clone();
                let result = tokio::task::spawn_blocking(move || completer.complete(&req))
                    .await
                    .unwrap_or_else(|e| Err(CompletionError::Internal(e.to_string())));
                if let Err(e) = &result {
                    tracing::warn!(request_id = %request_id, error = %e, "completion request failed");
                }
                break shared.orch().complete(&request_id, result, shared.clock.now_ms());
            }
            Poll::InFlight => break None,
            Poll::Done(item) => break item,
        }
    };
    shared.reply(id, json!({"items": item.into_iter().collect::<Vec<_>>()}));
}
