//! Masked-input construction: metadata prefix, budgeted before/after
//! context with a single mask sentinel pair, and training targets that start
//! at trigger characters and end at a line break.
//!
//! Inference inputs are laid out as
//! `metadata ++ before ++ <mask> ++ after ++ <mask>`; training sequences
//! append the target after the second sentinel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MetadataField, PromptConfig};
use crate::error::PromptError;
use crate::tokenize::{tokenize, CodeToken, TokenKind, TriggerSet};

/// Textual form of the mask sentinel when a prompt is rendered as a string.
/// Inside token sequences the sentinel is [`PromptPiece::Mask`], which no
/// source text can produce.
pub const MASK_TOKEN: &str = "<|mask|>";

/// Lowercase language identifier such as `py` or `cpp`. Common long names
/// (`python`, `javascript`) are folded to their short form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Language(String);

impl Language {
    pub fn new(s: &str) -> Result<Self, PromptError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(PromptError::EmptyLanguage);
        }
        let lower = s.to_ascii_lowercase();
        let canonical = match lower.as_str() {
            "python" => "py",
            "c++" | "cxx" => "cpp",
            "javascript" | "flow" => "js",
            "typescript" => "ts",
            _ => lower.as_str(),
        };
        Ok(Self(canonical.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Guesses a language from a file extension.
    pub fn from_path(path: &str) -> Option<Self> {
        let ext = path.rsplit_once('.')?.1;
        let lang = match ext {
            "py" => "py",
            "cpp" | "cc" | "cxx" | "hpp" | "h" => "cpp",
            "js" | "jsx" | "mjs" => "js",
            "ts" | "tsx" => "ts",
            "hack" | "php" | "hh" => "hack",
            "rs" => "rust",
            "java" => "java",
            "go" => "go",
            _ => return None,
        };
        Some(Self(lang.to_owned()))
    }
}

impl TryFrom<String> for Language {
    type Error = PromptError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(&s)
    }
}

impl From<Language> for String {
    fn from(l: Language) -> Self {
        l.0
    }
}

impl std::fmt::Display for Language {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FileMeta {
    pub file_path: String,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

impl FileMeta {
    /// One comment-style line per field, in `order`. Absent kernels are omitted.
    pub fn render(&self, order: &[MetadataField]) -> String {
        let mut out = String::new();
        for field in order {
            let (key, value) = match field {
                MetadataField::Language => ("language", self.language.as_str()),
                MetadataField::Path => ("path", self.file_path.as_str()),
                MetadataField::Kernel => match &self.kernel {
                    Some(k) => ("kernel", k.as_str()),
                    None => continue,
                },
            };
            out.push_str("# ");
            out.push_str(key);
            out.push_str(": ");
            // keep one field per line
            out.extend(value.chars().map(|c| if c == '\n' || c == '\r' { ' ' } else { c }));
            out.push('\n');
        }
        out
    }
}

/// Everything known at the cursor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CursorContext {
    #[serde(flatten)]
    pub meta: FileMeta,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptPiece<'a> {
    Token(&'a str),
    Mask,
}

/// A tokenized, budgeted, mask-framed model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcmInput {
    pub metadata_tokens: Vec<CodeToken>,
    pub before_tokens: Vec<CodeToken>,
    pub after_tokens: Vec<CodeToken>,
    pub total_budget: usize,
}

impl LcmInput {
    /// Token count including both sentinels.
    pub fn len(&self) -> usize {
        self.metadata_tokens.len() + self.before_tokens.len() + self.after_tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn before_text(&self) -> String {
        crate::tokenize::detokenize(&self.before_tokens)
    }

    pub fn after_text(&self) -> String {
        crate::tokenize::detokenize(&self.after_tokens)
    }

    pub fn pieces(&self) -> Vec<PromptPiece<'_>> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.metadata_tokens.iter().map(|t| PromptPiece::Token(&t.text)));
        out.extend(self.before_tokens.iter().map(|t| PromptPiece::Token(&t.text)));
        out.push(PromptPiece::Mask);
        out.extend(self.after_tokens.iter().map(|t| PromptPiece::Token(&t.text)));
        out.push(PromptPiece::Mask);
        out
    }
}

/// Joins pieces into a single string, writing sentinels as [`MASK_TOKEN`].
pub fn render_string(pieces: &[PromptPiece<'_>]) -> String {
    let mut s = String::new();
    for p in pieces {
        match p {
            PromptPiece::Token(t) => s.push_str(t),
            PromptPiece::Mask => s.push_str(MASK_TOKEN),
        }
    }
    s
}

/// Splits `remaining` tokens between before and after context.
///
/// If both sides fit, nothing is cut. Otherwise before gets `ceil(split*R)`
/// and after the rest, with any share a short side cannot use handed to the
/// other side.
pub fn allocate(before_len: usize, after_len: usize, remaining: usize, split: f64) -> (usize, usize) {
    if before_len + after_len <= remaining {
        return (before_len, after_len);
    }
    let before_share = (((split * remaining as f64) - 1e-9).ceil().max(0.0) as usize).min(remaining);
    let after_share = remaining - before_share;
    if before_len <= before_share {
        (before_len, remaining - before_len)
    } else if after_len <= after_share {
        (remaining - after_len, after_len)
    } else {
        (before_share, after_share)
    }
}

fn metadata_tokens(meta: &FileMeta, cfg: &PromptConfig) -> Vec<CodeToken> {
    tokenize(&meta.render(&cfg.metadata_order), &cfg.triggers)
}

fn frame(
    metadata_tokens: Vec<CodeToken>,
    mut before: Vec<CodeToken>,
    mut after: Vec<CodeToken>,
    reserved: usize,
    cfg: &PromptConfig,
) -> Result<LcmInput, PromptError> {
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(PromptError::InvalidSplit(cfg.split));
    }
    let required = metadata_tokens.len() + 2 + reserved;
    if cfg.budget < required {
        return Err(PromptError::BudgetTooSmall {
            budget: cfg.budget,
            required,
        });
    }
    let remaining = cfg.budget - required;
    let (keep_before, keep_after) = allocate(before.len(), after.len(), remaining, cfg.split);
    before.drain(..before.len() - keep_before);
    after.truncate(keep_after);
    Ok(LcmInput {
        metadata_tokens,
        before_tokens: before,
        after_tokens: after,
        total_budget: cfg.budget,
    })
}

/// Builds the inference input for a cursor context.
pub fn build_inference_input(ctx: &CursorContext, cfg: &PromptConfig) -> Result<LcmInput, PromptError> {
    frame(
        metadata_tokens(&ctx.meta, cfg),
        tokenize(&ctx.before, &cfg.triggers),
        tokenize(&ctx.after, &cfg.triggers),
        0,
        cfg,
    )
}

/// Frames already-tokenized context, as [`build_inference_input`] does.
pub fn frame_inference_tokens(
    meta: &FileMeta,
    before: Vec<CodeToken>,
    after: Vec<CodeToken>,
    cfg: &PromptConfig,
) -> Result<LcmInput, PromptError> {
    frame(metadata_tokens(meta, cfg), before, after, 0, cfg)
}

/// Token range `[start, end)` of a training target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpan {
    pub start: usize,
    pub end: usize,
}

impl MaskSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Byte range of the span within the tokenized source.
    pub fn byte_range(&self, tokens: &[CodeToken]) -> std::ops::Range<usize> {
        let start = tokens[self.start].byte_offset;
        let last = &tokens[self.end - 1];
        start..last.byte_offset + last.text.len()
    }
}

/// All legal target spans: each starts right after a trigger token or at a
/// line start, runs to and including the next newline, is at most
/// `max_target_tokens` long, and contains a non-blank token.
pub fn legal_spans(tokens: &[CodeToken], max_target_tokens: usize) -> Vec<MaskSpan> {
    let mut spans = Vec::new();
    // index of the next newline at or after i, scanned right to left
    let mut next_newline = vec![None; tokens.len()];
    let mut seen = None;
    for (i, t) in tokens.iter().enumerate().rev() {
        if t.kind == TokenKind::Newline {
            seen = Some(i);
        }
        next_newline[i] = seen;
    }
    // whether tokens[i..=next newline] holds anything non-blank
    let mut nonblank_to_eol = vec![false; tokens.len()];
    let mut acc = false;
    for (i, t) in tokens.iter().enumerate().rev() {
        if t.kind == TokenKind::Newline {
            acc = false;
        } else if !t.kind.is_blank() {
            acc = true;
        }
        nonblank_to_eol[i] = acc;
    }
    for i in 0..tokens.len() {
        let aligned = i == 0 || matches!(tokens[i - 1].kind, TokenKind::Trigger | TokenKind::Newline);
        if !aligned || !nonblank_to_eol[i] {
            continue;
        }
        let Some(nl) = next_newline[i] else { continue };
        if nl + 1 - i <= max_target_tokens {
            spans.push(MaskSpan { start: i, end: nl + 1 });
        }
    }
    spans
}

/// Picks one legal target span uniformly at random, deterministically in `seed`.
pub fn select_training_mask(
    tokens: &[CodeToken],
    seed: u64,
    max_target_tokens: usize,
) -> Result<MaskSpan, PromptError> {
    if tokens.is_empty() {
        return Err(PromptError::NoMaskableSpan("empty source"));
    }
    let spans = legal_spans(tokens, max_target_tokens.max(1));
    if spans.is_empty() {
        return Err(PromptError::NoMaskableSpan("no trigger-aligned non-blank line"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(spans[rng.random_range(0..spans.len())])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: LcmInput,
    pub target_tokens: Vec<CodeToken>,
}

impl TrainingExample {
    /// Frames `tokens` around `span`, reserving budget for the target.
    pub fn from_span(
        meta: &FileMeta,
        tokens: &[CodeToken],
        span: MaskSpan,
        cfg: &PromptConfig,
    ) -> Result<Self, PromptError> {
        if span.is_empty() {
            return Err(PromptError::EmptyTarget);
        }
        let input = frame(
            metadata_tokens(meta, cfg),
            tokens[..span.start].to_vec(),
            tokens[span.end..].to_vec(),
            span.len(),
            cfg,
        )?;
        Ok(Self {
            input,
            target_tokens: tokens[span.start..span.end].to_vec(),
        })
    }

    /// Tokenizes `source`, draws a target with `seed` and frames it.
    pub fn generate(meta: &FileMeta, source: &str, seed: u64, cfg: &PromptConfig) -> Result<Self, PromptError> {
        let tokens = tokenize(source, &cfg.triggers);
        let span = select_training_mask(&tokens, seed, cfg.max_target_tokens)?;
        Self::from_span(meta, &tokens, span, cfg)
    }

    pub fn target_text(&self) -> String {
        crate::tokenize::detokenize(&self.target_tokens)
    }
}

/// `metadata ++ before ++ <mask> ++ after ++ <mask> ++ target`.
pub fn render_training_example(ex: &TrainingExample) -> Result<Vec<PromptPiece<'_>>, PromptError> {
    if ex.target_tokens.is_empty() {
        return Err(PromptError::EmptyTarget);
    }
    let len = ex.input.len() + ex.target_tokens.len();
    if len > ex.input.total_budget {
        return Err(PromptError::BudgetTooSmall {
            budget: ex.input.total_budget,
            required: len,
        });
    }
    let mut pieces = ex.input.pieces();
    pieces.extend(ex.target_tokens.iter().map(|t| PromptPiece::Token(&t.text)));
    Ok(pieces)
}

/// Whether `triggers` would allow a suggestion to begin right after `before`.
pub fn at_trigger_or_line_start(before: &str, triggers: &TriggerSet) -> bool {
    match before.chars().next_back() {
        None => true,
        Some(c) => c == '\n' || triggers.contains(c),
    }
}
