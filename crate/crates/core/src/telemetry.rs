//! Append-only suggestion event log and the adoption metrics computed from
//! it: acceptance rate over suggestions displayed long enough, and the share
//! of typed characters that came from accepted suggestions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::TelemetryError;

pub const DEFAULT_MIN_DISPLAY_MS: u64 = 750;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Shown,
    Received,
    Accepted,
    Dismissed,
    Typed,
    Pasted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionEvent {
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion_id: Option<String>,
    pub uri: String,
    pub language: String,
    pub timestamp_ms: u64,
    #[serde(default)]
    pub char_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_duration_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    /// Round-trip latency reported with `received` events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<i64>,
}

impl SuggestionEvent {
    pub fn new(kind: EventKind, uri: &str, language: &str, timestamp_ms: u64) -> Self {
        Self {
            kind,
            suggestion_id: None,
            uri: uri.to_owned(),
            language: language.to_owned(),
            timestamp_ms,
            char_count: 0,
            display_duration_ms: None,
            session_id: None,
            latency_ms: None,
        }
    }

    pub fn suggestion(mut self, id: impl Into<String>) -> Self {
        self.suggestion_id = Some(id.into());
        self
    }

    pub fn chars(mut self, n: u64) -> Self {
        self.char_count = n;
        self
    }

    pub fn displayed_for(mut self, ms: u64) -> Self {
        self.display_duration_ms = Some(ms);
        self
    }

    pub fn session(mut self, id: impl Into<String>) -> Self {
        self.session_id = Some(id.into());
        self
    }

    pub fn latency(mut self, ms: i64) -> Self {
        self.latency_ms = Some(ms);
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenSuggestion {
    chars: u64,
    closed: bool,
}

/// Checks per-suggestion ordering: `shown` first, then at most one of
/// `accepted` / `dismissed`, with matching character counts.
#[derive(Debug, Default)]
pub struct EventValidator {
    suggestions: HashMap<String, OpenSuggestion>,
}

impl EventValidator {
    pub fn check(&mut self, ev: &SuggestionEvent) -> Result<(), TelemetryError> {
        let malformed = |m: &str| Err(TelemetryError::Malformed(m.to_owned()));
        let id = ev.suggestion_id.as_deref();
        match ev.kind {
            EventKind::Shown => {
                let Some(id) = id else { return malformed("shown event without suggestion_id") };
                if self.suggestions.contains_key(id) {
                    return malformed("suggestion shown twice");
                }
                self.suggestions.insert(
                    id.to_owned(),
                    OpenSuggestion {
                        chars: ev.char_count,
                        closed: false,
                    },
                );
            }
            EventKind::Accepted | EventKind::Dismissed => {
                let Some(id) = id else { return malformed("terminal event without suggestion_id") };
                let Some(open) = self.suggestions.get_mut(id) else {
                    return malformed("accepted/dismissed without prior shown");
                };
                if open.closed {
                    return malformed("suggestion already accepted or dismissed");
                }
                if ev.display_duration_ms.is_none() {
                    return malformed("terminal event without display_duration_ms");
                }
                if ev.kind == EventKind::Accepted && ev.char_count != open.chars {
                    return malformed("accepted char_count differs from shown");
                }
                open.closed = true;
            }
            EventKind::Received => {
                let Some(id) = id else { return malformed("received event without suggestion_id") };
                if !self.suggestions.contains_key(id) {
                    return malformed("received for unknown suggestion");
                }
            }
            EventKind::Typed | EventKind::Pasted => {}
        }
        Ok(())
    }
}

struct LogInner {
    events: Vec<SuggestionEvent>,
    validator: EventValidator,
    sink: Option<BufWriter<File>>,
}

/// Thread-safe append-only event log, optionally mirrored to an NDJSON file.
pub struct EventLog {
    inner: Mutex<LogInner>,
    capacity: Option<usize>,
}

impl Default for EventLog {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self {
            inner: Mutex::new(LogInner {
                events: Vec::new(),
                validator: EventValidator::default(),
                sink: None,
            }),
            capacity: None,
        }
    }

    /// Appends to `path`, creating it if needed. Existing events are
    /// replayed so validation continues where the file left off.
    pub fn open(path: &Path) -> Result<Self, TelemetryError> {
        let existing = if path.exists() { read_log(path)? } else { Vec::new() };
        let mut validator = EventValidator::default();
        for ev in &existing {
            validator.check(ev)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Mutex::new(LogInner {
                events: existing,
                validator,
                sink: Some(BufWriter::new(file)),
            }),
            capacity: None,
        })
    }

    pub fn with_capacity_limit(mut self, max_events: usize) -> Self {
        self.capacity = Some(max_events);
        self
    }

    pub fn record(&self, ev: SuggestionEvent) -> Result<(), TelemetryError> {
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(cap) = self.capacity {
            if inner.events.len() >= cap {
                return Err(TelemetryError::StorageFull(cap));
            }
        }
        inner.validator.check(&ev)?;
        if let Some(sink) = inner.sink.as_mut() {
            let line = serde_json::to_string(&ev).expect("events always serialize");
            sink.write_all(line.as_bytes())?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        inner.events.push(ev);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<SuggestionEvent> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).events.clone()
    }
}

/// Reads an NDJSON event log. Blank lines are skipped.
pub fn read_log(path: &Path) -> Result<Vec<SuggestionEvent>, TelemetryError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| TelemetryError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    pub suggestions_shown: u64,
    /// Suggestions closed after being displayed at least the threshold.
    pub eligible: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub typed_chars: u64,
    pub pasted_chars: u64,
    pub accepted_chars: u64,
    pub pct_chars_from_ai: f64,
    pub users: u64,
}

impl LanguageRow {
    fn finish(&mut self) {
        self.acceptance_rate = ratio(self.accepted, self.eligible);
        self.pct_chars_from_ai = ratio(self.accepted_chars, self.typed_chars + self.accepted_chars);
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub min_display_ms: u64,
    pub languages: Vec<LanguageRow>,
    pub overall: LanguageRow,
}

#[derive(Default)]
struct Acc {
    row: LanguageRow,
    sessions: BTreeSet<String>,
}

impl MetricsReport {
    pub fn compute(events: &[SuggestionEvent], min_display_ms: u64) -> Self {
        let mut by_lang: BTreeMap<&str, Acc> = BTreeMap::new();
        let mut all_sessions = BTreeSet::new();
        for ev in events {
            let acc = by_lang.entry(ev.language.as_str()).or_default();
            if let Some(s) = &ev.session_id {
                acc.sessions.insert(s.clone());
                all_sessions.insert(s.clone());
            }
            let row = &mut acc.row;
            match ev.kind {
                EventKind::Shown => row.suggestions_shown += 1,
                EventKind::Accepted | EventKind::Dismissed => {
                    let long_enough = ev.display_duration_ms.unwrap_or(0) >= min_display_ms;
                    if long_enough {
                        row.eligible += 1;
                    }
                    if ev.kind == EventKind::Accepted {
                        row.accepted_chars += ev.char_count;
                        if long_enough {
                            row.accepted += 1;
                        }
                    }
                }
                EventKind::Typed => row.typed_chars += ev.char_count,
                EventKind::Pasted => row.pasted_chars += ev.char_count,
                EventKind::Received => {}
            }
        }
        let mut overall = LanguageRow {
            language: "overall".into(),
            users: all_sessions.len() as u64,
            ..Default::default()
        };
        let languages = by_lang
            .into_iter()
            .map(|(lang, acc)| {
                let mut row = acc.row;
                row.language = lang.to_owned();
                row.users = acc.sessions.len() as u64;
                row.finish();
                overall.suggestions_shown += row.suggestions_shown;
                overall.eligible += row.eligible;
                overall.accepted += row.accepted;
                overall.typed_chars += row.typed_chars;
                overall.pasted_chars += row.pasted_chars;
                overall.accepted_chars += row.accepted_chars;
                row
            })
            .collect();
        overall.finish();
        Self {
            min_display_ms,
            languages,
            overall,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "language,suggestions_shown,eligible,accepted,acceptance_rate,typed_chars,pasted_chars,accepted_chars,pct_chars_from_ai,users\n",
        );
        for r in self.languages.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{},{},{},{:.6},{}",
                r.language,
                r.suggestions_shown,
                r.eligible,
                r.accepted,
                r.acceptance_rate,
                r.typed_chars,
                r.pasted_chars,
                r.accepted_chars,
                r.pct_chars_from_ai,
                r.users
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<10} {:>8} {:>9} {:>11} {:>12} {:>6}\n",
            "language", "shown", "eligible", "accept%", "ai-chars%", "users"
        );
        for r in self.languages.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                s,
                "{:<10} {:>8} {:>9} {:>10.1}% {:>11.1}% {:>6}",
                r.language,
                r.suggestions_shown,
                r.eligible,
                r.acceptance_rate * 100.0,
                r.pct_chars_from_ai * 100.0,
                r.users
            );
        }
        let _ = writeln!(s, "(suggestions counted when displayed >= {} ms)", self.min_display_ms);
        s
    }
}

/// Per-language acceptance rate over suggestions displayed at least `min_display_ms`.
pub fn acceptance_rate(events: &[SuggestionEvent], min_display_ms: u64) -> BTreeMap<String, f64> {
    MetricsReport::compute(events, min_display_ms)
        .languages
        .into_iter()
        .filter(|r| r.eligible > 0)
        .map(|r| (r.language, r.acceptance_rate))
        .collect()
}

/// Per-language `accepted / (typed + accepted)` characters; pastes excluded.
pub fn pct_chars_from_ai(events: &[SuggestionEvent]) -> BTreeMap<String, f64> {
    MetricsReport::compute(events, DEFAULT_MIN_DISPLAY_MS)
        .languages
        .into_iter()
        .filter(|r| r.typed_chars + r.accepted_chars > 0)
        .map(|r| (r.language, r.pct_chars_from_ai))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shown(id: &str, t: u64, chars: u64) -> SuggestionEvent {
        SuggestionEvent::new(EventKind::Shown, "file:///a.py", "py", t)
            .suggestion(id)
            .chars(chars)
    }

    fn close(kind: EventKind, id: &str, t: u64, chars: u64, shown_for: u64) -> SuggestionEvent {
        SuggestionEvent::new(kind, "file:///a.py", "py", t)
            .suggestion(id)
            .chars(chars)
            .displayed_for(shown_for)
    }

    #[test]
    fn shown_then_accepted_in_order() {
        let log = EventLog::in_memory();
        log.record(shown("s1", 0, 5)).unwrap();
        log.record(close(EventKind::Accepted, "s1", 900, 5, 900)).unwrap();
        let evs = log.snapshot();
        assert_eq!(evs[0].kind, EventKind::Shown);
        assert_eq!(evs[1].kind, EventKind::Accepted);
    }

    #[test]
    fn accepted_without_shown_rejected() {
        let log = EventLog::in_memory();
        let err = log.record(close(EventKind::Accepted, "s1", 900, 5, 900)).unwrap_err();
        assert!(matches!(err, TelemetryError::Malformed(_)));
        assert!(log.is_empty());
    }

    #[test]
    fn double_close_and_char_mismatch_rejected() {
        let log = EventLog::in_memory();
        log.record(shown("s1", 0, 5)).unwrap();
        assert!(log.record(close(EventKind::Accepted, "s1", 9, 4, 9)).is_err());
        log.record(close(EventKind::Dismissed, "s1", 9, 0, 9)).unwrap();
        assert!(log.record(close(EventKind::Accepted, "s1", 9, 5, 9)).is_err());
    }

    #[test]
    fn capacity_limit() {
        let log = EventLog::in_memory().with_capacity_limit(1);
        log.record(SuggestionEvent::new(EventKind::Typed, "u", "py", 0).chars(1)).unwrap();
        assert!(matches!(
            log.record(SuggestionEvent::new(EventKind::Typed, "u", "py", 1).chars(1)),
            Err(TelemetryError::StorageFull(1))
        ));
    }

    #[test]
    fn acceptance_rate_ignores_short_displays() {
        let mut evs = Vec::new();
        for i in 0..10 {
            let id = format!("long{i}");
            evs.push(shown(&id, i * 2000, 3));
            let kind = if i < 2 { EventKind::Accepted } else { EventKind::Dismissed };
            let chars = if i < 2 { 3 } else { 0 };
            evs.push(close(kind, &id, i * 2000 + 800, chars, 800));
        }
        for i in 0..3 {
            let id = format!("short{i}");
            evs.push(shown(&id, 50_000 + i, 3));
            evs.push(close(EventKind::Dismissed, &id, 50_100 + i, 0, 100));
        }
        assert_eq!(acceptance_rate(&evs, 750)["py"], 0.2);
        assert_eq!(acceptance_rate(&[], 750).len(), 0);
    }

    #[test]
    fn pct_chars_excludes_pastes() {
        let evs = vec![
            SuggestionEvent::new(EventKind::Pasted, "u", "py", 0).chars(10_000),
            SuggestionEvent::new(EventKind::Typed, "u", "py", 1).chars(100),
            shown("s", 2, 100),
            close(EventKind::Accepted, "s", 1000, 100, 998),
        ];
        assert_eq!(pct_chars_from_ai(&evs)["py"], 0.5);
        let typed_only = vec![SuggestionEvent::new(EventKind::Typed, "u", "py", 1).chars(5)];
        assert_eq!(pct_chars_from_ai(&typed_only)["py"], 0.0);
    }

    #[test]
    fn users_are_distinct_sessions() {
        let evs = vec![
            SuggestionEvent::new(EventKind::Typed, "u", "py", 0).chars(1).session("a"),
            SuggestionEvent::new(EventKind::Typed, "u", "py", 1).chars(1).session("a"),
            SuggestionEvent::new(EventKind::Typed, "u", "cpp", 1).chars(1).session("a"),
            SuggestionEvent::new(EventKind::Typed, "u", "cpp", 1).chars(1).session("b"),
        ];
        let r = MetricsReport::compute(&evs, 750);
        assert_eq!(r.languages[0].language, "cpp");
        assert_eq!(r.languages[0].users, 2);
        assert_eq!(r.languages[1].users, 1);
        assert_eq!(r.overall.users, 2);
    }

    #[test]
    fn file_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        {
            let log = EventLog::open(&path).unwrap();
            log.record(shown("s1", 0, 5)).unwrap();
        }
        let log = EventLog::open(&path).unwrap();
        // validation resumes from the replayed file
        assert!(log.record(shown("s1", 1, 5)).is_err());
        log.record(close(EventKind::Accepted, "s1", 800, 5, 800)).unwrap();
        let evs = read_log(&path).unwrap();
        assert_eq!(evs.len(), 2);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().all(|l| l.contains("\"timestamp_ms\":")));
    }

    #[test]
    fn renderings_are_stable() {
        let evs = vec![shown("s", 0, 2), close(EventKind::Accepted, "s", 800, 2, 800)];
        let a = MetricsReport::compute(&evs, 750);
        let b = MetricsReport::compute(&evs, 750);
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_csv().starts_with("language,"));
        assert!(a.to_table().contains("100.0%"));
    }
}
