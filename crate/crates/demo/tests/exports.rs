use gw_demo::{debounce_trace, prompt_layout, score_completion};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn layout_respects_budget_and_split() {
    let before = "x ".repeat(500);
    let after = "y ".repeat(500);
    let v = parse(prompt_layout("a.py", "python", &before, &after, 200, 0.7));
    let meta = v["metadata_tokens"].as_u64().unwrap();
    let r = 200 - meta - 2;
    assert_eq!(v["total_tokens"], 200);
    assert_eq!(v["before_tokens"].as_u64().unwrap(), (0.7 * r as f64).ceil() as u64);
    assert_eq!(v["metadata"], "# language: py\n# path: a.py\n");
    assert!(v["rendered"].as_str().unwrap().matches("<|mask|>").count() == 2);

    let err = parse(prompt_layout("a.py", "", "x", "", 200, 0.7));
    assert!(err["error"].as_str().is_some());
    let err = parse(prompt_layout("a.py", "py", "x", "", 200, 1.5));
    assert!(err["error"].as_str().is_some());
}

#[test]
fn scoring() {
    let v = parse(score_completion("x = foo(a, c)\n", "x = foo(a, b)\n"));
    assert_eq!(v["exact_match"], 0);
    assert!((v["bleu"].as_f64().unwrap() - 0.7071067811865475).abs() < 1e-12);
    let v = parse(score_completion("y = 1", "y = 1\n"));
    assert_eq!((v["exact_match"].as_u64(), v["exact_match_strict"].as_u64()), (Some(1), Some(0)));
    assert!(parse(score_completion("a", "  ")).get("error").is_some());
}

#[test]
fn debouncing() {
    let v = parse(debounce_trace("30, 0,10,20", 20, ""));
    assert_eq!(v["dispatches"], serde_json::json!([50]));
    let v = parse(debounce_trace("0,100", 20, " )"));
    assert_eq!(v["dispatches"], serde_json::json!([20, 120]));
    let v = parse(debounce_trace("0", 20, "foo"));
    assert_eq!(v["suggestion_allowed"], false);
    assert_eq!(v["dispatches"], serde_json::json!([]));
    assert!(parse(debounce_trace("0,x", 20, "")).get("error").is_some());
}
