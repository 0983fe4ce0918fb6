//! Editor-facing completion orchestration as a clock-driven state machine:
//! documents, per-document request supersession, debouncing, the completion
//! cache, the suppression rule and didChange-derived telemetry.
//!
//! Nothing here performs I/O or reads a clock. Callers pass monotonic
//! millisecond timestamps and carry [`Poll::Dispatch`] requests to a
//! completer themselves, feeding results back through
//! [`Orchestrator::complete`].

mod cache;
mod debounce;
mod document;

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use lru::LruCache;
use serde::{Deserialize, Serialize};

pub use cache::{CacheEntry, CacheKey, CompletionCache, DEFAULT_CACHE_CAPACITY};
pub use debounce::{debounce, suggestion_allowed, ALLOWED_CLOSERS, DEFAULT_DEBOUNCE_MS};
pub use document::{DocumentState, InvalidRange, Position, Range, TextChange};

use crate::backend::Completion;
use crate::config::PromptConfig;
use crate::error::TelemetryError;
use crate::pipeline::{CompletionError, CompletionRequest, CompletionResponse};
use crate::prompt::{build_inference_input, CursorContext, FileMeta, Language};
use crate::telemetry::{EventKind, EventLog, SuggestionEvent, DEFAULT_MIN_DISPLAY_MS};

/// Single insertions longer than this that are not acceptances count as pastes.
pub const DEFAULT_PASTE_THRESHOLD: usize = 50;
const REQUEST_HISTORY: usize = 4096;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

/// Milliseconds since construction.
#[derive(Debug)]
pub struct MonotonicClock(Instant);

impl Default for MonotonicClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for MonotonicClock {
    fn now_ms(&self) -> u64 {
        self.0.elapsed().as_millis() as u64
    }
}

/// Milliseconds since the Unix epoch, comparable with client timestamps.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }
}

/// Hand-advanced clock for tests and simulations.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        Self(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrchestratorConfig {
    pub debounce_ms: u64,
    pub cache_capacity: usize,
    /// Display threshold handed to metrics reporting.
    pub min_display_ms: u64,
    pub paste_threshold: usize,
    pub prompt: PromptConfig,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        Self {
            debounce_ms: DEFAULT_DEBOUNCE_MS,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            min_display_ms: DEFAULT_MIN_DISPLAY_MS,
            paste_threshold: DEFAULT_PASTE_THRESHOLD,
            prompt: PromptConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestState {
    Waiting,
    InFlight,
    Cancelled,
    Completed,
}

impl RequestState {
    pub fn is_terminal(self) -> bool {
        matches!(self, RequestState::Cancelled | RequestState::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct PendingRequest {
    pub request_id: String,
    pub uri: String,
    pub version: i64,
    pub deadline_ms: u64,
    pub state: RequestState,
    pub dispatched_at_ms: Option<u64>,
    request: CompletionRequest,
    key: CacheKey,
    anchor: usize,
    position: Position,
    /// Whether the suggestion may keep its trailing newline (nothing but
    /// whitespace right of the cursor).
    line_is_empty_after: bool,
    shown: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InlineItem {
    pub insert_text: String,
    pub range: Range,
    pub request_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Poll {
    /// Still debouncing; poll again at this time.
    Wait { until_ms: u64 },
    /// Send this to the completer and report back via `complete`.
    Dispatch(CompletionRequest),
    /// A backend call for this request is outstanding.
    InFlight,
    /// Finished; `None` means nothing to show.
    Done(Option<InlineItem>),
}

#[derive(Debug, Clone)]
struct Outstanding {
    suggestion_id: String,
    text: String,
    anchor: usize,
    shown_at_ms: u64,
    language: String,
}

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("document {0} is not open")]
    UnknownDocument(String),
    #[error("version {got} does not advance past {current}")]
    VersionRegression { current: i64, got: i64 },
    #[error(transparent)]
    InvalidRange(#[from] InvalidRange),
    #[error("position {0:?} is outside the document")]
    PositionOutOfBounds(Position),
    #[error("unknown request id {0}")]
    UnknownRequestId(String),
}

/// Insertion classes used for typed-character accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertKind {
    Typed,
    Pasted,
    Accepted,
    /// Already counted through an explicit `cc/accepted`.
    Absorbed,
    /// Deletion only.
    Empty,
}

pub struct Orchestrator {
    config: OrchestratorConfig,
    docs: HashMap<String, DocumentState>,
    requests: LruCache<String, PendingRequest>,
    latest: HashMap<String, String>,
    outstanding: HashMap<String, Outstanding>,
    absorb: HashMap<String, String>,
    cache: CompletionCache,
    telemetry: Arc<EventLog>,
    session_id: Option<String>,
    next_id: u64,
}

fn file_path_of(uri: &str) -> &str {
    uri.strip_prefix("file://").unwrap_or(uri)
}

impl Orchestrator {
    pub fn new(config: OrchestratorConfig, telemetry: Arc<EventLog>) -> Self {
        Self {
            cache: CompletionCache::new(config.cache_capacity),
            config,
            docs: HashMap::new(),
            requests: LruCache::new(NonZeroUsize::new(REQUEST_HISTORY).expect("non-zero")),
            latest: HashMap::new(),
            outstanding: HashMap::new(),
            absorb: HashMap::new(),
            telemetry,
            session_id: None,
            next_id: 0,
        }
    }

    pub fn config(&self) -> &OrchestratorConfig {
        &self.config
    }

    pub fn set_session_id(&mut self, id: Option<String>) {
        self.session_id = id;
    }

    pub fn telemetry(&self) -> &Arc<EventLog> {
        &self.telemetry
    }

    pub fn cache(&self) -> &CompletionCache {
        &self.cache
    }

    pub fn document(&self, uri: &str) -> Option<&DocumentState> {
        self.docs.get(uri)
    }

    pub fn request(&self, request_id: &str) -> Option<&PendingRequest> {
        self.requests.peek(request_id)
    }

    /// Requests per document that are waiting or in flight.
    pub fn active_requests(&self, uri: &str) -> usize {
        self.requests
            .iter()
            .filter(|(_, r)| r.uri == uri && !r.state.is_terminal())
            .count()
    }

    pub fn did_open(&mut self, uri: &str, language: &str, text: String, version: i64) {
        self.docs
            .insert(uri.to_owned(), DocumentState::new(uri, language, text, version));
    }

    pub fn did_close(&mut self, uri: &str, now_ms: u64) {
        self.supersede(uri);
        self.dismiss_outstanding(uri, now_ms);
        self.docs.remove(uri);
        self.absorb.remove(uri);
    }

    fn event(&self, kind: EventKind, uri: &str, language: &str, now_ms: u64) -> SuggestionEvent {
        let mut ev = SuggestionEvent::new(kind, uri, language, now_ms);
        ev.session_id = self.session_id.clone();
        ev
    }

    fn emit(&self, ev: SuggestionEvent) {
        if let Err(e) = self.telemetry.record(ev) {
            log_telemetry_error(&e);
        }
    }

    fn dismiss_outstanding(&mut self, uri: &str, now_ms: u64) {
        if let Some(out) = self.outstanding.remove(uri) {
            let ev = self
                .event(EventKind::Dismissed, uri, &out.language, now_ms)
                .suggestion(out.suggestion_id)
                .displayed_for(now_ms.saturating_sub(out.shown_at_ms));
            self.emit(ev);
        }
    }

    fn supersede(&mut self, uri: &str) {
        if let Some(id) = self.latest.remove(uri) {
            if let Some(r) = self.requests.peek_mut(&id) {
                if !r.state.is_terminal() {
                    r.state = RequestState::Cancelled;
                }
            }
        }
    }

    /// Applies edits in order, classifying each insertion for telemetry.
    /// Any waiting or in-flight request for the document is superseded.
    pub fn did_change(
        &mut self,
        uri: &str,
        version: i64,
        changes: &[TextChange],
        now_ms: u64,
    ) -> Result<Vec<InsertKind>, OrchestratorError> {
        let doc = self
            .docs
            .get(uri)
            .ok_or_else(|| OrchestratorError::UnknownDocument(uri.to_owned()))?;
        if version <= doc.version {
            return Err(OrchestratorError::VersionRegression {
                current: doc.version,
                got: version,
            });
        }
        let language = doc.language.clone();
        self.supersede(uri);
        let mut kinds = Vec::with_capacity(changes.len());
        for change in changes {
            let doc = self.docs.get_mut(uri).expect("checked above");
            let start = doc.apply(change)?;
            let kind = self.classify(uri, &language, start, &change.text, now_ms);
            kinds.push(kind);
        }
        self.docs.get_mut(uri).expect("checked above").version = version;
        Ok(kinds)
    }

    fn classify(&mut self, uri: &str, language: &str, start: usize, text: &str, now_ms: u64) -> InsertKind {
        if self.absorb.get(uri).is_some_and(|t| t == text) {
            self.absorb.remove(uri);
            return InsertKind::Absorbed;
        }
        self.absorb.remove(uri);
        let chars = text.chars().count() as u64;
        if let Some(out) = self.outstanding.get(uri) {
            if !text.is_empty() && out.text == text && out.anchor == start {
                let out = self.outstanding.remove(uri).expect("present");
                let ev = self
                    .event(EventKind::Accepted, uri, language, now_ms)
                    .suggestion(out.suggestion_id)
                    .chars(chars)
                    .displayed_for(now_ms.saturating_sub(out.shown_at_ms));
                self.emit(ev);
                return InsertKind::Accepted;
            }
        }
        self.dismiss_outstanding(uri, now_ms);
        if chars == 0 {
            InsertKind::Empty
        } else if chars as usize > self.config.paste_threshold {
            self.emit(self.event(EventKind::Pasted, uri, language, now_ms).chars(chars));
            InsertKind::Pasted
        } else {
            self.emit(self.event(EventKind::Typed, uri, language, now_ms).chars(chars));
            InsertKind::Typed
        }
    }

    /// Registers an inline-completion request. Suppressed positions and
    /// cache hits finish immediately; everything else waits out the debounce
    /// window. A newer request for the same document cancels older ones.
    pub fn request_completion(
        &mut self,
        uri: &str,
        position: Position,
        now_ms: u64,
    ) -> Result<(String, Poll), OrchestratorError> {
        let doc = self
            .docs
            .get(uri)
            .ok_or_else(|| OrchestratorError::UnknownDocument(uri.to_owned()))?;
        let anchor = doc
            .offset_at(position)
            .ok_or(OrchestratorError::PositionOutOfBounds(position))?;
        let position = doc.position_at(anchor);
        let rest = doc.rest_of_line(anchor);
        let allowed = suggestion_allowed(rest);
        let line_is_empty_after = rest.trim().is_empty();

        self.next_id += 1;
        let request_id = format!("req-{}", self.next_id);
        let built = Language::new(&doc.language).ok().and_then(|language| {
            let ctx = CursorContext {
                meta: FileMeta {
                    file_path: file_path_of(uri).to_owned(),
                    language,
                    kernel: None,
                },
                before: doc.text()[..anchor].to_owned(),
                after: doc.text()[anchor..].to_owned(),
            };
            let input = build_inference_input(&ctx, &self.config.prompt).ok()?;
            let req = CompletionRequest {
                request_id: request_id.clone(),
                file_path: ctx.meta.file_path,
                language: ctx.meta.language.to_string(),
                before: input.before_text(),
                after: input.after_text(),
                kernel: None,
            };
            Some((CacheKey::of_input(&input), req))
        });
        let version = doc.version;

        self.supersede(uri);
        let Some((key, request)) = built.filter(|_| allowed) else {
            return Ok((request_id, Poll::Done(None)));
        };
        let mut record = PendingRequest {
            request_id: request_id.clone(),
            uri: uri.to_owned(),
            version,
            deadline_ms: now_ms + self.config.debounce_ms,
            state: RequestState::Waiting,
            dispatched_at_ms: None,
            request,
            key,
            anchor,
            position,
            line_is_empty_after,
            shown: false,
        };
        if let Some(hit) = self.cache.lookup(&key) {
            record.state = RequestState::Completed;
            record.dispatched_at_ms = Some(now_ms);
            let item = self.present(&mut record, &hit.text, now_ms);
            self.requests.put(request_id.clone(), record);
            return Ok((request_id, Poll::Done(item)));
        }
        let until_ms = record.deadline_ms;
        self.requests.put(request_id.clone(), record);
        self.latest.insert(uri.to_owned(), request_id.clone());
        Ok((request_id, Poll::Wait { until_ms }))
    }

    /// Advances a request: keeps waiting, dispatches it once the debounce
    /// deadline passes, or reports that it is finished.
    pub fn poll(&mut self, request_id: &str, now_ms: u64) -> Poll {
        let Some(record) = self.requests.peek(request_id) else {
            return Poll::Done(None);
        };
        match record.state {
            RequestState::Cancelled | RequestState::Completed => Poll::Done(None),
            RequestState::InFlight => Poll::InFlight,
            RequestState::Waiting if now_ms < record.deadline_ms => Poll::Wait {
                until_ms: record.deadline_ms,
            },
            RequestState::Waiting => {
                let key = record.key;
                if let Some(hit) = self.cache.lookup(&key) {
                    let mut record = self.requests.pop(request_id).expect("present");
                    record.state = RequestState::Completed;
                    record.dispatched_at_ms = Some(now_ms);
                    let item = self.present(&mut record, &hit.text, now_ms);
                    self.requests.put(request_id.to_owned(), record);
                    return Poll::Done(item);
                }
                let record = self.requests.get_mut(request_id).expect("present");
                record.state = RequestState::InFlight;
                record.dispatched_at_ms = Some(now_ms);
                Poll::Dispatch(record.request.clone())
            }
        }
    }

    /// Feeds back a completer result. Responses are cached even when their
    /// request was superseded, but only the current request is shown.
    pub fn complete(
        &mut self,
        request_id: &str,
        result: Result<CompletionResponse, CompletionError>,
        now_ms: u64,
    ) -> Option<InlineItem> {
        let mut record = self.requests.pop(request_id)?;
        if let Ok(resp) = &result {
            let completion = Completion::one_line(&resp.completion_text, resp.strategy, resp.generated_tokens, &resp.backend_id);
            self.cache.insert(record.key, completion, now_ms);
        }
        let item = if record.state == RequestState::InFlight {
            record.state = RequestState::Completed;
            match result {
                Ok(resp) => self.present(&mut record, &resp.completion_text, now_ms),
                Err(e) => {
                    tracing::warn!(request_id, error = %e, "completion failed");
                    None
                }
            }
        } else {
            None
        };
        if self.latest.get(&record.uri).is_some_and(|id| id == request_id) {
            self.latest.remove(&record.uri);
        }
        self.requests.put(request_id.to_owned(), record);
        item
    }

    fn present(&mut self, record: &mut PendingRequest, text: &str, now_ms: u64) -> Option<InlineItem> {
        let mut text = Completion::one_line(text, crate::backend::Strategy::Greedy, 0, "").text;
        if !record.line_is_empty_after {
            while text.ends_with('\n') || text.ends_with('\r') {
                text.pop();
            }
        }
        if text.trim().is_empty() {
            return None;
        }
        self.dismiss_outstanding(&record.uri, now_ms);
        let language = record.request.language.clone();
        let ev = self
            .event(EventKind::Shown, &record.uri, &language, now_ms)
            .suggestion(record.request_id.clone())
            .chars(text.chars().count() as u64);
        self.emit(ev);
        record.shown = true;
        self.outstanding.insert(
            record.uri.clone(),
            Outstanding {
                suggestion_id: record.request_id.clone(),
                text: text.clone(),
                anchor: record.anchor,
                shown_at_ms: now_ms,
                language,
            },
        );
        Some(InlineItem {
            insert_text: text,
            range: Range {
                start: record.position,
                end: record.position,
            },
            request_id: record.request_id.clone(),
        })
    }

    /// Client receipt of a response; returns the round-trip latency.
    pub fn cc_received(&mut self, request_id: &str, client_timestamp_ms: u64) -> Result<i64, OrchestratorError> {
        let record = self
            .requests
            .peek(request_id)
            .ok_or_else(|| OrchestratorError::UnknownRequestId(request_id.to_owned()))?;
        let dispatched = record
            .dispatched_at_ms
            .ok_or_else(|| OrchestratorError::UnknownRequestId(request_id.to_owned()))?;
        let latency = client_timestamp_ms as i64 - dispatched as i64;
        if record.shown {
            let ev = self
                .event(EventKind::Received, &record.uri, &record.request.language, client_timestamp_ms)
                .suggestion(request_id)
                .latency(latency);
            self.emit(ev);
        }
        Ok(latency)
    }

    /// Explicit acceptance from the client. Wins over didChange matching:
    /// the next insertion of the same text is not counted as typing.
    pub fn cc_accepted(&mut self, request_id: &str, now_ms: u64) -> Result<(), OrchestratorError> {
        let uri = self
            .requests
            .peek(request_id)
            .map(|r| r.uri.clone())
            .ok_or_else(|| OrchestratorError::UnknownRequestId(request_id.to_owned()))?;
        let Some(out) = self.outstanding.get(&uri) else {
            return Ok(());
        };
        if out.suggestion_id != request_id {
            return Ok(());
        }
        let out = self.outstanding.remove(&uri).expect("present");
        let ev = self
            .event(EventKind::Accepted, &uri, &out.language, now_ms)
            .suggestion(out.suggestion_id)
            .chars(out.text.chars().count() as u64)
            .displayed_for(now_ms.saturating_sub(out.shown_at_ms));
        self.emit(ev);
        self.absorb.insert(uri, out.text);
        Ok(())
    }
}

fn log_telemetry_error(e: &TelemetryError) {
    tracing::warn!(error = %e, "dropping telemetry event");
}
