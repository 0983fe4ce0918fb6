//! The orchestrator driven by a simulated clock.

use std::sync::Arc;

use gw_core::backend::Strategy;
use gw_core::orchestrator::{
    debounce, suggestion_allowed, Orchestrator, OrchestratorConfig, Poll, Position, Range, TextChange,
};
use gw_core::pipeline::{CompletionRequest, CompletionResponse};
use gw_core::telemetry::EventLog;
use proptest::prelude::*;

const URI: &str = "file:///w/main.py";

fn orchestrator(text: &str) -> Orchestrator {
    let mut o = Orchestrator::new(OrchestratorConfig::default(), Arc::new(EventLog::in_memory()));
    o.did_open(URI, "python", text.into(), 0);
    o
}

fn reply(req: &CompletionRequest, text: &str) -> CompletionResponse {
    CompletionResponse {
        request_id: req.request_id.clone(),
        completion_text: text.into(),
        strategy: Strategy::Greedy,
        model_latency_ms: 0,
        input_tokens: 0,
        backend_id: "sim".into(),
        generated_tokens: 1,
    }
}

/// Types one character per keystroke time, requesting a completion after
/// each, and returns the times at which backend calls are made. Timers due
/// at a given millisecond fire before input arriving at that millisecond.
fn simulate(keystrokes: &[u64]) -> Vec<u64> {
    let mut o = orchestrator("");
    let mut ids: Vec<String> = Vec::new();
    let mut calls = Vec::new();
    let end = keystrokes.last().copied().unwrap_or(0) + 100;
    let mut next = 0;
    let mut col = 0u32;
    for now in 0..=end {
        for id in &ids {
            if let Poll::Dispatch(_) = o.poll(id, now) {
                calls.push(now);
            }
        }
        while next < keystrokes.len() && keystrokes[next] == now {
            let at = Position::new(0, col);
            let change = TextChange {
                range: Some(Range { start: at, end: at }),
                text: "k".into(),
            };
            o.did_change(URI, next as i64 + 1, &[change], now).unwrap();
            col += 1;
            let (id, _) = o.request_completion(URI, Position::new(0, col), now).unwrap();
            ids.push(id);
            next += 1;
        }
    }
    calls
}

#[test]
fn spec_debounce_traces() {
    assert_eq!(simulate(&[0, 10, 20, 30]), vec![50]);
    assert_eq!(simulate(&[0]), vec![20]);
    assert_eq!(simulate(&[0, 100]), vec![20, 120]);
}

#[test]
fn repeated_context_calls_backend_once() {
    let mut o = orchestrator("def f():\n    return \n");
    let pos = Position::new(1, 11);
    let mut calls = 0;
    for round in 0..5u64 {
        let now = round * 100;
        let (id, poll) = o.request_completion(URI, pos, now).unwrap();
        let poll = match poll {
            Poll::Wait { until_ms } => o.poll(&id, until_ms),
            p => p,
        };
        match poll {
            Poll::Dispatch(req) => {
                calls += 1;
                assert!(o.complete(&id, Ok(reply(&req, "None\n")), now + 30).is_some());
            }
            Poll::Done(item) => assert_eq!(item.unwrap().insert_text, "None\n"),
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(calls, 1);
}

proptest! {
    #[test]
    fn dispatches_follow_debounce_rule(gaps in prop::collection::vec(1u64..60, 1..25)) {
        let mut t = 0;
        let trace: Vec<u64> = gaps.iter().map(|g| { t += g; t }).collect();
        prop_assert_eq!(simulate(&trace), debounce(&trace, 20));
    }

    #[test]
    fn suppressed_positions_never_reach_backend(
        left in "[a-z =(]{0,12}",
        right in "[a-z )\\]}(]{0,8}",
    ) {
        let text = format!("{left}{right}\n");
        let mut o = orchestrator(&text);
        let col = left.chars().count() as u32;
        let (id, poll) = o.request_completion(URI, Position::new(0, col), 0).unwrap();
        let allowed = suggestion_allowed(&right);
        let dispatched = matches!(o.poll(&id, 1000), Poll::Dispatch(_));
        if !allowed {
            prop_assert_eq!(poll, Poll::Done(None));
            prop_assert!(!dispatched);
        } else {
            prop_assert!(dispatched);
        }
        let trimmed = right.trim();
        prop_assert_eq!(allowed, trimmed.chars().all(|c| matches!(c, ')' | ']' | '}')));
    }
}
