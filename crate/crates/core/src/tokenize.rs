//! Lossless, trigger-aware code tokenizer.
//!
//! Source text is split into maximal runs of one character class
//! (identifier, number, operator, whitespace) with trigger characters and
//! newlines always emitted as single tokens. Concatenating the token texts
//! reproduces the input byte for byte.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::PromptError;

/// Characters at which a suggestion (or a training mask) may begin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TriggerSet {
    chars: Vec<char>,
}

impl TriggerSet {
    pub fn new<I: IntoIterator<Item = char>>(chars: I) -> Result<Self, PromptError> {
        let mut out: Vec<char> = Vec::new();
        for c in chars {
            if c.is_alphanumeric() || c == '_' {
                return Err(PromptError::InvalidTriggerSet(format!(
                    "{c:?} is a word character"
                )));
            }
            if !out.contains(&c) {
                out.push(c);
            }
        }
        if out.is_empty() {
            return Err(PromptError::InvalidTriggerSet("empty".into()));
        }
        Ok(Self { chars: out })
    }

    #[inline]
    pub fn contains(&self, c: char) -> bool {
        self.chars.contains(&c)
    }

    /// Iterates in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = char> + '_ {
        self.chars.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

impl Default for TriggerSet {
    fn default() -> Self {
        Self {
            chars: vec!['(', '.', '=', ',', '[', ':'],
        }
    }
}

impl TryFrom<String> for TriggerSet {
    type Error = PromptError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TriggerSet> for String {
    fn from(t: TriggerSet) -> Self {
        t.chars.into_iter().collect()
    }
}

impl std::str::FromStr for TriggerSet {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s.chars())
    }
}

impl fmt::Display for TriggerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.chars {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Number,
    Operator,
    Trigger,
    Whitespace,
    Newline,
    Other,
}

impl TokenKind {
    pub fn is_blank(self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Newline)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeToken {
    pub text: String,
    pub byte_offset: usize,
    pub kind: TokenKind,
}

const OPERATOR_CHARS: &str = "+-*/%<>!&|^~?@=.,:;";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Digit,
    Operator,
    Space,
    Single(TokenKind),
}

fn classify(c: char, triggers: &TriggerSet) -> Class {
    if triggers.contains(c) {
        Class::Single(TokenKind::Trigger)
    } else if c == '\n' || c == '\r' {
        Class::Single(TokenKind::Newline)
    } else if c.is_ascii_digit() {
        Class::Digit
    } else if c.is_alphanumeric() || c == '_' {
        Class::Word
    } else if c.is_whitespace() {
        Class::Space
    } else if OPERATOR_CHARS.contains(c) {
        Class::Operator
    } else {
        Class::Single(TokenKind::Other)
    }
}

/// Splits `source` into tokens. Total: never fails, empty input yields no tokens.
pub fn tokenize(source: &str, triggers: &TriggerSet) -> Vec<CodeToken> {
    let mut tokens = Vec::with_capacity(source.len() / 3 + 1);
    let mut iter = source.char_indices().peekable();

    while let Some((start, c)) = iter.next() {
        let class = classify(c, triggers);
        let mut end = start + c.len_utf8();
        let kind = match class {
            Class::Single(TokenKind::Newline) => {
                if c == '\r' {
                    if let Some(&(i, '\n')) = iter.peek() {
                        end = i + 1;
                        iter.next();
                    }
                }
                TokenKind::Newline
            }
            Class::Single(kind) => kind,
            Class::Word | Class::Digit => {
                while let Some(&(i, n)) = iter.peek() {
                    match classify(n, triggers) {
                        Class::Word | Class::Digit => {
                            end = i + n.len_utf8();
                            iter.next();
                        }
                        _ => break,
                    }
                }
                if class == Class::Word {
                    TokenKind::Identifier
                } else {
                    TokenKind::Number
                }
            }
            Class::Operator | Class::Space => {
                while let Some(&(i, n)) = iter.peek() {
                    if classify(n, triggers) == class {
                        end = i + n.len_utf8();
                        iter.next();
                    } else {
                        break;
                    }
                }
                if class == Class::Operator {
                    TokenKind::Operator
                } else {
                    TokenKind::Whitespace
                }
            }
        };
        tokens.push(CodeToken {
            text: source[start..end].to_owned(),
            byte_offset: start,
            kind,
        });
    }
    tokens
}

/// Concatenates token texts.
pub fn detokenize<'a, I>(tokens: I) -> String
where
    I: IntoIterator<Item = &'a CodeToken>,
{
    tokens.into_iter().map(|t| t.text.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, &str)> {
        tokenize(src, &TriggerSet::default())
            .into_iter()
            .map(|t| (t.kind, &src[t.byte_offset..t.byte_offset + t.text.len()]))
            .collect()
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("", &TriggerSet::default()).is_empty());
    }

    #[test]
    fn member_call() {
        use TokenKind::*;
        assert_eq!(
            kinds("a.b("),
            vec![(Identifier, "a"), (Trigger, "."), (Identifier, "b"), (Trigger, "(")]
        );
    }

    #[test]
    fn crlf_is_one_newline() {
        let toks = tokenize("a\r\nb", &TriggerSet::default());
        assert_eq!(toks[1].text, "\r\n");
        assert_eq!(toks[1].kind, TokenKind::Newline);
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn compound_operators_split_at_triggers() {
        use TokenKind::*;
        assert_eq!(
            kinds("x+=1"),
            vec![(Identifier, "x"), (Operator, "+"), (Trigger, "="), (Number, "1")]
        );
    }

    #[test]
    fn trigger_set_rejects_word_chars() {
        assert!(TriggerSet::new(['(', 'a']).is_err());
        assert!(TriggerSet::new(['1']).is_err());
        assert!(TriggerSet::new([]).is_err());
        let t: TriggerSet = "((.".parse().unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.to_string(), "(.");
    }

    #[test]
    fn custom_trigger_changes_kind() {
        let t = TriggerSet::new(['+']).unwrap();
        let toks = tokenize("a+b.c", &t);
        assert_eq!(toks[1].kind, TokenKind::Trigger);
        assert_eq!(toks[3].kind, TokenKind::Operator);
    }
}
