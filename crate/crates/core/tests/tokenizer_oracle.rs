//! Hand-checked token splits for short snippets.

use gw_core::tokenize::{detokenize, tokenize, TokenKind, TriggerSet};

fn split(src: &str) -> Vec<&str> {
    let toks = tokenize(src, &TriggerSet::default());
    let texts: Vec<&str> = toks.iter().map(|t| &src[t.byte_offset..t.byte_offset + t.text.len()]).collect();
    assert_eq!(detokenize(&toks), src);
    texts
}

#[test]
fn hand_checked_snippets() {
    let cases: &[(&str, &[&str])] = &[
        ("a.b(", &["a", ".", "b", "("]),
        ("", &[]),
        ("x = 1\n", &["x", " ", "=", " ", "1", "\n"]),
        ("foo(a, b)", &["foo", "(", "a", ",", " ", "b", ")"]),
        ("self.value", &["self", ".", "value"]),
        ("import numpy as np\n", &["import", " ", "numpy", " ", "as", " ", "np", "\n"]),
        ("x += 10", &["x", " ", "+", "=", " ", "10"]),
        ("a->b", &["a", "->", "b"]),
        ("std::vector<int>", &["std", ":", ":", "vector", "<", "int", ">"]),
        ("if (x >= 0) {", &["if", " ", "(", "x", " ", ">", "=", " ", "0", ")", " ", "{"]),
        ("xs[i]", &["xs", "[", "i", "]"]),
        ("def f():\n    pass", &["def", " ", "f", "(", ")", ":", "\n", "    ", "pass"]),
        ("a\r\nb\rc", &["a", "\r\n", "b", "\r", "c"]),
        ("\n\n", &["\n", "\n"]),
        ("s = \"hi\"", &["s", " ", "=", " ", "\"", "hi", "\""]),
        ("x && !y", &["x", " ", "&&", " ", "!", "y"]),
        ("café_2 = π", &["café_2", " ", "=", " ", "π"]),
        ("3.14", &["3", ".", "14"]),
        ("a;b", &["a", ";", "b"]),
        ("\t\t# comment", &["\t\t", "#", " ", "comment"]),
        ("++i;", &["++", "i", ";"]),
    ];
    for (src, want) in cases {
        assert_eq!(split(src), *want, "tokenizing {src:?}");
    }
}

#[test]
fn kinds_of_mixed_line() {
    let toks = tokenize("a.b(", &TriggerSet::default());
    let kinds: Vec<TokenKind> = toks.iter().map(|t| t.kind).collect();
    assert_eq!(
        kinds,
        [TokenKind::Identifier, TokenKind::Trigger, TokenKind::Identifier, TokenKind::Trigger]
    );
}

#[test]
fn custom_trigger_set_changes_splits() {
    let triggers: TriggerSet = "(".parse().unwrap();
    let toks = tokenize("a.b(", &triggers);
    let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(texts, ["a", ".", "b", "("]);
    assert_eq!(toks[1].kind, TokenKind::Operator);
    assert_eq!(toks[3].kind, TokenKind::Trigger);
}
