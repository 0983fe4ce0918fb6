#![allow(dead_code)]

use proptest::prelude::*;

/// Code-like fragments; joined they tokenize without crossing fragment
/// boundaries in surprising ways often enough to exercise every token class.
pub const FRAGMENTS: &[&str] = &[
    "foo", "bar", "x", "self", "42", "7", " ", "  ", "    ", "\n", "\n", "\r\n", "(", ")", ".", "=", ",", "[", "]",
    ":", "+", "->", "\"", "{", "}", "return", "if", "\t", "é", "π",
];

pub fn code(max_fragments: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(FRAGMENTS), 0..max_fragments).prop_map(|v| v.concat())
}

/// Segments recovered from a rendered training example.
#[derive(Debug, PartialEq, Eq)]
pub struct Segments {
    pub metadata: String,
    pub before: String,
    pub after: String,
    pub target: String,
}

/// Independent parser for `metadata ++ before ++ <mask> ++ after ++ <mask> ++ target`.
/// Metadata is the run of leading `# language|path|kernel: ...` lines.
pub fn parse_segments(rendered: &str, mask: &str) -> Option<Segments> {
    let mut metadata_end = 0;
    for line in rendered.split_inclusive('\n') {
        let is_meta = ["# language: ", "# path: ", "# kernel: "]
            .iter()
            .any(|p| line.starts_with(p))
            && line.ends_with('\n');
        if !is_meta {
            break;
        }
        metadata_end += line.len();
    }
    let rest = &rendered[metadata_end..];
    let parts: Vec<&str> = rest.split(mask).collect();
    if parts.len() != 3 {
        return None;
    }
    Some(Segments {
        metadata: rendered[..metadata_end].to_owned(),
        before: parts[0].to_owned(),
        after: parts[1].to_owned(),
        target: parts[2].to_owned(),
    })
}
