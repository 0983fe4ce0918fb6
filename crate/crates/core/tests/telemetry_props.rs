use gw_core::telemetry::{acceptance_rate, pct_chars_from_ai, read_log, EventKind, EventLog, MetricsReport, SuggestionEvent};
use proptest::prelude::*;

fn shown(id: &str, lang: &str, t: u64, chars: u64) -> SuggestionEvent {
    SuggestionEvent::new(EventKind::Shown, "file:///a", lang, t).suggestion(id).chars(chars)
}

fn closed(kind: EventKind, id: &str, lang: &str, t: u64, chars: u64, shown_for: u64) -> SuggestionEvent {
    SuggestionEvent::new(kind, "file:///a", lang, t)
        .suggestion(id)
        .chars(chars)
        .displayed_for(shown_for)
}

#[test]
fn acceptance_rate_counts_only_long_displays() {
    let mut evs = Vec::new();
    for i in 0..13 {
        let id = format!("s{i}");
        evs.push(shown(&id, "py", i * 10, 4));
        let (kind, dur) = match i {
            0 | 1 => (EventKind::Accepted, 900),
            2..=9 => (EventKind::Dismissed, 750 + i),
            _ => (EventKind::Dismissed, 749),
        };
        evs.push(closed(kind, &id, "py", i * 10 + dur, 4, dur));
    }
    let rates = acceptance_rate(&evs, 750);
    assert_eq!(rates["py"], 0.2);
    let report = MetricsReport::compute(&evs, 750);
    assert_eq!(report.overall.eligible, 10);
    assert_eq!(report.overall.suggestions_shown, 13);
    assert_eq!(format!("{:.3}", report.overall.acceptance_rate), "0.200");
}

#[test]
fn char_share_excludes_pastes() {
    let evs = vec![
        SuggestionEvent::new(EventKind::Typed, "file:///a", "cpp", 0).chars(920),
        shown("s", "cpp", 1, 80),
        closed(EventKind::Accepted, "s", "cpp", 2, 80, 10),
        SuggestionEvent::new(EventKind::Pasted, "file:///a", "cpp", 3).chars(5000),
    ];
    assert_eq!(pct_chars_from_ai(&evs)["cpp"], 0.08);
}

#[test]
fn ndjson_log_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.ndjson");
    {
        let log = EventLog::open(&path).unwrap();
        log.record(shown("a", "py", 1, 3).session("u1")).unwrap();
        log.record(closed(EventKind::Accepted, "a", "py", 900, 3, 899)).unwrap();
        // out-of-order terminal event is rejected and not written
        assert!(log.record(closed(EventKind::Dismissed, "a", "py", 901, 3, 900)).is_err());
    }
    let evs = read_log(&path).unwrap();
    assert_eq!(evs.len(), 2);
    assert_eq!(evs[0].session_id.as_deref(), Some("u1"));
    // reopening replays state, so the suggestion stays closed
    let log = EventLog::open(&path).unwrap();
    assert_eq!(log.len(), 2);
    assert!(log.record(closed(EventKind::Dismissed, "a", "py", 902, 3, 901)).is_err());
}

#[test]
fn accepted_without_shown_is_malformed() {
    let log = EventLog::in_memory();
    assert!(log.record(closed(EventKind::Accepted, "zz", "py", 1, 1, 1)).is_err());
    assert!(log.is_empty());
}

#[derive(Debug, Clone)]
enum Op {
    Type(u8, u16),
    Paste(u8, u16),
    Suggest(u8, u16, bool, u16),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..3, 0u16..200).prop_map(|(l, n)| Op::Type(l, n)),
        (0u8..3, 0u16..2000).prop_map(|(l, n)| Op::Paste(l, n)),
        (0u8..3, 1u16..120, any::<bool>(), 0u16..2000).prop_map(|(l, n, a, d)| Op::Suggest(l, n, a, d)),
    ]
}

const LANGS: [&str; 3] = ["py", "cpp", "hack"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn character_conservation(ops in prop::collection::vec(op(), 0..60)) {
        let log = EventLog::in_memory();
        let (mut typed, mut pasted, mut accepted_chars) = (0u64, 0u64, 0u64);
        let (mut shown_n, mut eligible, mut accepted) = (0u64, 0u64, 0u64);
        for (i, op) in ops.iter().enumerate() {
            let t = i as u64 * 1000;
            match *op {
                Op::Type(l, n) => {
                    typed += u64::from(n);
                    log.record(SuggestionEvent::new(EventKind::Typed, "u", LANGS[l as usize], t).chars(n.into())).unwrap();
                }
                Op::Paste(l, n) => {
                    pasted += u64::from(n);
                    log.record(SuggestionEvent::new(EventKind::Pasted, "u", LANGS[l as usize], t).chars(n.into())).unwrap();
                }
                Op::Suggest(l, n, acc, dur) => {
                    let id = format!("s{i}");
                    let lang = LANGS[l as usize];
                    shown_n += 1;
                    log.record(shown(&id, lang, t, n.into())).unwrap();
                    let kind = if acc { EventKind::Accepted } else { EventKind::Dismissed };
                    log.record(closed(kind, &id, lang, t + u64::from(dur), n.into(), dur.into())).unwrap();
                    if dur >= 750 {
                        eligible += 1;
                        accepted += u64::from(acc);
                    }
                    if acc {
                        accepted_chars += u64::from(n);
                    }
                }
            }
        }
        let r = MetricsReport::compute(&log.snapshot(), 750);
        let o = &r.overall;
        prop_assert_eq!((o.typed_chars, o.pasted_chars, o.accepted_chars), (typed, pasted, accepted_chars));
        prop_assert_eq!((o.suggestions_shown, o.eligible, o.accepted), (shown_n, eligible, accepted));
        let sum = |f: fn(&gw_core::telemetry::LanguageRow) -> u64| r.languages.iter().map(f).sum::<u64>();
        prop_assert_eq!(sum(|l| l.typed_chars), typed);
        prop_assert_eq!(sum(|l| l.pasted_chars), pasted);
        prop_assert_eq!(sum(|l| l.accepted_chars), accepted_chars);
        prop_assert_eq!(sum(|l| l.eligible), eligible);
        for row in r.languages.iter().chain([o]) {
            prop_assert!((0.0..=1.0).contains(&row.acceptance_rate));
            prop_assert!((0.0..=1.0).contains(&row.pct_chars_from_ai));
            prop_assert!(row.accepted <= row.eligible);
        }
    }
}
