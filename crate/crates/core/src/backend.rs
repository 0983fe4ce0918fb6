//! Completion backend contract and the simple built-in backends.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::prompt::LcmInput;

pub const DEFAULT_MAX_NEW_TOKENS: usize = 100;
pub const DEFAULT_BEAM_THRESHOLD: usize = 1500;
pub const DEFAULT_BEAM_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Strategy {
    Greedy,
    Beam { width: usize },
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Greedy => f.write_str("greedy"),
            Strategy::Beam { width } => write!(f, "beam({width})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeParams {
    pub max_new_tokens: usize,
    pub beam_threshold_tokens: usize,
    pub beam_width: usize,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            beam_threshold_tokens: DEFAULT_BEAM_THRESHOLD,
            beam_width: DEFAULT_BEAM_WIDTH,
        }
    }
}

impl DecodeParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_new_tokens == 0 || self.beam_threshold_tokens == 0 || self.beam_width == 0 {
            return Err(BackendError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    /// Beam search for inputs shorter than the threshold, greedy otherwise.
    pub fn strategy_for(&self, input_tokens: usize) -> Strategy {
        if input_tokens < self.beam_threshold_tokens {
            Strategy::Beam {
                width: self.beam_width,
            }
        } else {
            Strategy::Greedy
        }
    }
}

/// One generated suggestion. The text never holds an interior newline.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub strategy: Strategy,
    pub generated_tokens: usize,
    pub backend_id: String,
}

impl Completion {
    /// Cuts `text` right after its first line break so at most one trailing
    /// newline survives.
    pub fn one_line(text: &str, strategy: Strategy, generated_tokens: usize, backend_id: &str) -> Self {
        let text = match text.find('\n') {
            Some(i) => &text[..=i],
            None => text,
        };
        Self {
            text: text.to_owned(),
            strategy,
            generated_tokens,
            backend_id: backend_id.to_owned(),
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> &str;

    /// Stable identity of the loaded model.
    fn fingerprint(&self) -> String;

    fn healthy(&self) -> bool {
        true
    }

    /// Produces exactly one completion for `input`.
    fn generate(&self, request_id: &str, input: &LcmInput, params: &DecodeParams) -> Result<Completion, BackendError>;
}

/// Returns stored targets keyed by request or sample id.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    truth: HashMap<String, String>,
}

impl OracleBackend {
    pub fn new(truth: HashMap<String, String>) -> Self {
        Self { truth }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(json)?))
    }
}

impl CompletionBackend for OracleBackend {
    fn id(&self) -> &str {
        "oracle"
    }

    fn fingerprint(&self) -> String {
        format!("oracle:{}", self.truth.len())
    }

    fn generate(&self, request_id: &str, input: &LcmInput, params: &DecodeParams) -> Result<Completion, BackendError> {
        let text = self
            .truth
            .get(request_id)
            .ok_or_else(|| BackendError::UnknownSample(request_id.to_owned()))?;
        let tokens = crate::tokenize::tokenize(text, &crate::tokenize::TriggerSet::default()).len();
        Ok(Completion {
            text: text.clone(),
            strategy: params.strategy_for(input.len()),
            generated_tokens: tokens,
            backend_id: self.id().to_owned(),
        })
    }
}

/// Always answers with the same text. Counts calls, which tests use to
/// observe caching and debouncing.
#[derive(Debug, Default)]
pub struct ConstantBackend {
    text: String,
    calls: AtomicUsize,
}

impl ConstantBackend {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionBackend for ConstantBackend {
    fn id(&self) -> &str {
        "constant"
    }

    fn fingerprint(&self) -> String {
        format!("constant:{:?}", self.text)
    }

    fn generate(&self, _request_id: &str, input: &LcmInput, params: &DecodeParams) -> Result<Completion, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(Completion::one_line(
            &self.text,
            params.strategy_for(input.len()),
            usize::from(!self.text.is_empty()),
            self.id(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PromptConfig;
    use crate::prompt::{build_inference_input, CursorContext, FileMeta, Language};

    fn input() -> LcmInput {
        let ctx = CursorContext {
            meta: FileMeta {
                file_path: "a.py".into(),
                language: Language::new("py").unwrap(),
                kernel: None,
            },
            before: "x = ".into(),
            after: String::new(),
        };
        build_inference_input(&ctx, &PromptConfig::default()).unwrap()
    }

    #[test]
    fn strategy_threshold() {
        let p = DecodeParams::default();
        assert_eq!(p.strategy_for(1400), Strategy::Beam { width: 3 });
        assert_eq!(p.strategy_for(1499), Strategy::Beam { width: 3 });
        assert_eq!(p.strategy_for(1500), Strategy::Greedy);
        assert_eq!(p.strategy_for(1600), Strategy::Greedy);
        let other = DecodeParams {
            max_new_tokens: 7,
            beam_width: 5,
            ..p
        };
        assert!(matches!(other.strategy_for(1499), Strategy::Beam { .. }));
        assert_eq!(other.strategy_for(1500), Strategy::Greedy);
    }

    #[test]
    fn one_line_cuts_after_first_newline() {
        let c = Completion::one_line("a\nb\n", Strategy::Greedy, 3, "t");
        assert_eq!(c.text, "a\n");
        assert_eq!(Completion::one_line("ab", Strategy::Greedy, 1, "t").text, "ab");
    }

    #[test]
    fn oracle_lookup() {
        let oracle = OracleBackend::new(HashMap::from([("1".to_owned(), "x = 1\n".to_owned())]));
        let p = DecodeParams::default();
        assert_eq!(oracle.generate("1", &input(), &p).unwrap().text, "x = 1\n");
        assert_eq!(
            oracle.generate("2", &input(), &p),
            Err(BackendError::UnknownSample("2".into()))
        );
    }

    #[test]
    fn constant_counts_calls() {
        let b = ConstantBackend::new("");
        b.generate("a", &input(), &DecodeParams::default()).unwrap();
        b.generate("b", &input(), &DecodeParams::default()).unwrap();
        assert_eq!(b.calls(), 2);
    }

    #[test]
    fn strategy_wire_format() {
        assert_eq!(serde_json::to_string(&Strategy::Greedy).unwrap(), r#"{"type":"greedy"}"#);
        assert_eq!(
            serde_json::to_string(&Strategy::Beam { width: 3 }).unwrap(),
            r#"{"type":"beam","width":3}"#
        );
    }
}
