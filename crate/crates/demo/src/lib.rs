//! WebAssembly bindings for the static demo page. Every export takes plain
//! strings and numbers and returns JSON, so the same functions run natively
//! in tests.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use gw_core::backtest::{bleu_breakdown, exact_match};
use gw_core::config::PromptConfig;
use gw_core::orchestrator::{debounce, suggestion_allowed};
use gw_core::prompt::{build_inference_input, render_string, CursorContext, FileMeta, Language};
use gw_core::tokenize::{detokenize, tokenize};

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

#[derive(Serialize)]
struct Layout {
    metadata: String,
    before_kept: String,
    after_kept: String,
    metadata_tokens: usize,
    before_tokens: usize,
    after_tokens: usize,
    before_dropped: usize,
    after_dropped: usize,
    total_tokens: usize,
    budget: usize,
    rendered: String,
}

/// Tokenizes and truncates a cursor context the way the service does.
#[wasm_bindgen]
pub fn prompt_layout(path: &str, language: &str, before: &str, after: &str, budget: usize, split: f64) -> String {
    let language = match Language::new(language) {
        Ok(l) => l,
        Err(e) => return error(e),
    };
    let cfg = PromptConfig {
        budget,
        split,
        ..PromptConfig::default()
    };
    let ctx = CursorContext {
        meta: FileMeta {
            file_path: path.to_owned(),
            language,
            kernel: None,
        },
        before: before.to_owned(),
        after: after.to_owned(),
    };
    let input = match build_inference_input(&ctx, &cfg) {
        Ok(i) => i,
        Err(e) => return error(e),
    };
    let full_before = tokenize(before, &cfg.triggers).len();
    let full_after = tokenize(after, &cfg.triggers).len();
    let layout = Layout {
        metadata: detokenize(&input.metadata_tokens),
        before_kept: input.before_text(),
        after_kept: input.after_text(),
        metadata_tokens: input.metadata_tokens.len(),
        before_tokens: input.before_tokens.len(),
        after_tokens: input.after_tokens.len(),
        before_dropped: full_before - input.before_tokens.len(),
        after_dropped: full_after - input.after_tokens.len(),
        total_tokens: input.len(),
        budget,
        rendered: render_string(&input.pieces()),
    };
    serde_json::to_string(&layout).expect("layout serializes")
}

/// Exact match (normalized and strict) and BLEU with its breakdown.
#[wasm_bindgen]
pub fn score_completion(candidate: &str, reference: &str) -> String {
    match bleu_breakdown(candidate, reference) {
        Ok(b) => json!({
            "exact_match": exact_match(candidate, reference, false),
            "exact_match_strict": exact_match(candidate, reference, true),
            "bleu": b.score,
            "precisions": b.precisions,
            "brevity_penalty": b.brevity_penalty,
            "candidate_len": b.candidate_len,
            "reference_len": b.reference_len,
        })
        .to_string(),
        Err(e) => error(e),
    }
}

/// Backend call times for comma-separated keystroke times, plus whether
/// the text right of the cursor allows a suggestion.
#[wasm_bindgen]
pub fn debounce_trace(keystrokes: &str, window_ms: u32, right_of_cursor: &str) -> String {
    let mut times = Vec::new();
    for part in keystrokes.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.parse::<u64>() {
            Ok(t) => times.push(t),
            Err(_) => return error(format!("not a time: {part:?}")),
        }
    }
    if window_ms == 0 {
        return error("window must be positive");
    }
    times.sort_unstable();
    let allowed = suggestion_allowed(right_of_cursor);
    let dispatches = if allowed { debounce(&times, window_ms.into()) } else { Vec::new() };
    json!({
        "keystrokes": times,
        "dispatches": dispatches,
        "suggestion_allowed": allowed,
    })
    .to_string()
}
