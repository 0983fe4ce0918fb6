//! Open-document text with LSP (UTF-16) positions.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    /// UTF-16 code units from the line start.
    pub character: u32,
}

impl Position {
    pub fn new(line: u32, character: u32) -> Self {
        Self { line, character }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub start: Position,
    pub end: Position,
}

/// One `contentChanges` entry; no range means the whole text is replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextChange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentState {
    pub uri: String,
    pub language: String,
    text: String,
    /// Byte offset of each line start.
    line_starts: Vec<usize>,
    pub version: i64,
}

impl DocumentState {
    pub fn new(uri: &str, language: &str, text: String, version: i64) -> Self {
        let mut doc = Self {
            uri: uri.to_owned(),
            language: language.to_owned(),
            text,
            line_starts: Vec::new(),
            version,
        };
        doc.reindex();
        doc
    }

    fn reindex(&mut self) {
        self.line_starts.clear();
        self.line_starts.push(0);
        self.line_starts
            .extend(self.text.match_indices('\n').map(|(i, _)| i + 1));
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    fn line_bounds(&self, line: usize) -> (usize, usize) {
        let start = self.line_starts[line];
        let end = self
            .line_starts
            .get(line + 1)
            .map_or(self.text.len(), |&next| next - 1);
        (start, end)
    }

    /// Byte offset of `pos`, or `None` when the line does not exist.
    /// Characters past the line end clamp to it.
    pub fn offset_at(&self, pos: Position) -> Option<usize> {
        let line = pos.line as usize;
        if line >= self.line_starts.len() {
            return None;
        }
        let (start, end) = self.line_bounds(line);
        let mut units = 0u32;
        for (i, c) in self.text[start..end].char_indices() {
            if units >= pos.character {
                return Some(start + i);
            }
            units += c.len_utf16() as u32;
        }
        Some(end)
    }

    pub fn position_at(&self, offset: usize) -> Position {
        let offset = offset.min(self.text.len());
        let line = self.line_starts.partition_point(|&s| s <= offset) - 1;
        let start = self.line_starts[line];
        let character = self.text[start..offset].chars().map(|c| c.len_utf16() as u32).sum();
        Position::new(line as u32, character)
    }

    /// Text from `offset` to the end of its line, excluding the line break.
    pub fn rest_of_line(&self, offset: usize) -> &str {
        let line = self.line_starts.partition_point(|&s| s <= offset) - 1;
        let (_, end) = self.line_bounds(line);
        self.text[offset..end].trim_end_matches('\r')
    }

    /// Applies one change and returns the byte offset where it starts.
    pub fn apply(&mut self, change: &TextChange) -> Result<usize, InvalidRange> {
        let (start, end) = match change.range {
            None => (0, self.text.len()),
            Some(r) => {
                let s = self.offset_at(r.start).ok_or(InvalidRange(r))?;
                let e = self.offset_at(r.end).ok_or(InvalidRange(r))?;
                if s > e {
                    return Err(InvalidRange(r));
                }
                (s, e)
            }
        };
        self.text.replace_range(start..end, &change.text);
        self.reindex();
        Ok(start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("range {0:?} is outside the document")]
pub struct InvalidRange(pub Range);
