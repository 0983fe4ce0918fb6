//! Order-k n-gram reference model with back-off, greedy and beam decoding,
//! and an `NGRM1` binary file format.
//!
//! The model conditions only on the before-context; after-context tokens are
//! accepted through [`LcmInput`] and ignored.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use crate::backend::{Completion, CompletionBackend, DecodeParams, Strategy};
use crate::error::{BackendError, ModelFileError};
use crate::prompt::LcmInput;
use crate::tokenize::{tokenize, TriggerSet};

const MAGIC: &[u8; 5] = b"NGRM1";
pub const DEFAULT_ORDER: usize = 4;

type TokenId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Successors {
    /// Sorted by token id, which is also lexicographic token order.
    entries: Vec<(TokenId, u64)>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramModel {
    order: usize,
    /// Sorted token texts; a token's id is its index.
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
    newline: Vec<bool>,
    /// `tables[n - 1]` maps n-token contexts to successor counts.
    tables: Vec<HashMap<Vec<TokenId>, Successors>>,
    fingerprint: String,
}

/// A decoded continuation and its model log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub tokens: Vec<String>,
    pub log_prob: f64,
}

impl Scored {
    pub fn text(&self) -> String {
        self.tokens.concat()
    }
}

#[derive(Clone)]
struct Hypothesis {
    ids: Vec<TokenId>,
    score: f64,
    done: bool,
}

/// Builds a model from `(path, text)` files. Windows never cross files.
pub fn build_ngram(corpus: &[(String, String)], order: usize) -> NGramModel {
    build_ngram_with(corpus, order, &TriggerSet::default())
}

pub fn build_ngram_with(corpus: &[(String, String)], order: usize, triggers: &TriggerSet) -> NGramModel {
    assert!(order >= 2, "n-gram order must be at least 2");
    let files: Vec<Vec<String>> = corpus
        .iter()
        .map(|(_, text)| tokenize(text, triggers).into_iter().map(|t| t.text).collect())
        .collect();
    let vocab: Vec<String> = files
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<String, TokenId> = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as TokenId)).collect();

    let mut raw: Vec<HashMap<Vec<TokenId>, HashMap<TokenId, u64>>> = vec![HashMap::new(); order - 1];
    for file in &files {
        let ids: Vec<TokenId> = file.iter().map(|t| index[t]).collect();
        for end in 1..ids.len() {
            for ctx_len in 1..order {
                if ctx_len > end {
                    break;
                }
                let ctx = ids[end - ctx_len..end].to_vec();
                *raw[ctx_len - 1].entry(ctx).or_default().entry(ids[end]).or_default() += 1;
            }
        }
    }
    let tables = raw
        .into_iter()
        .map(|table| {
            table
                .into_iter()
                .map(|(ctx, succ)| {
                    let mut entries: Vec<(TokenId, u64)> = succ.into_iter().collect();
                    entries.sort_unstable();
                    let total = entries.iter().map(|e| e.1).sum();
                    (ctx, Successors { entries, total })
                })
                .collect()
        })
        .collect();
    NGramModel::assemble(order, vocab, tables)
}

impl NGramModel {
    fn assemble(order: usize, vocab: Vec<String>, tables: Vec<HashMap<Vec<TokenId>, Successors>>) -> Self {
        let index = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as TokenId)).collect();
        let newline = vocab.iter().map(|t| t == "\n" || t == "\r\n" || t == "\r").collect();
        let mut model = Self {
            order,
            vocab,
            index,
            newline,
            tables,
            fingerprint: String::new(),
        };
        let mut bytes = Vec::new();
        model.write_to(&mut bytes).expect("writing to a Vec cannot fail");
        model.fingerprint = hex::encode(&Sha256::digest(&bytes)[..8]);
        model
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    /// Successor counts recorded after `context` (exact length match, no back-off).
    pub fn successors(&self, context: &[&str]) -> Option<Vec<(&str, u64)>> {
        if context.is_empty() || context.len() >= self.order {
            return None;
        }
        let ids: Option<Vec<TokenId>> = context.iter().map(|t| self.index.get(*t).copied()).collect();
        let succ = self.tables[context.len() - 1].get(&ids?)?;
        Some(
            succ.entries
                .iter()
                .map(|&(id, n)| (self.vocab[id as usize].as_str(), n))
                .collect(),
        )
    }

    /// Longest known context suffix of `history`, backing off one token at a
    /// time. `None` ends generation.
    fn lookup(&self, history: &[Option<TokenId>]) -> Option<&Successors> {
        let max = (self.order - 1).min(history.len());
        for n in (1..=max).rev() {
            let suffix = &history[history.len() - n..];
            if suffix.iter().any(Option::is_none) {
                continue;
            }
            let key: Vec<TokenId> = suffix.iter().map(|t| t.unwrap()).collect();
            if let Some(s) = self.tables[n - 1].get(&key) {
                return Some(s);
            }
        }
        None
    }

    fn history_of<'a, I: IntoIterator<Item = &'a str>>(&self, prompt: I) -> Vec<Option<TokenId>> {
        let prompt: Vec<&str> = prompt.into_iter().collect();
        let keep = prompt.len().saturating_sub(self.order - 1);
        prompt[keep..].iter().map(|t| self.index.get(*t).copied()).collect()
    }

    fn extend(history: &[Option<TokenId>], ids: &[TokenId]) -> Vec<Option<TokenId>> {
        let mut h = history.to_vec();
        h.extend(ids.iter().map(|&i| Some(i)));
        h
    }

    fn finish(&self, ids: Vec<TokenId>, log_prob: f64) -> Scored {
        Scored {
            tokens: ids.into_iter().map(|i| self.vocab[i as usize].clone()).collect(),
            log_prob,
        }
    }

    /// Log-probability the model assigns to `continuation` after `prompt`,
    /// or `None` if some step is impossible under back-off.
    pub fn score<'a, I>(&self, prompt: I, continuation: &[&str]) -> Option<f64>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut history = self.history_of(prompt);
        let mut total = 0.0;
        for tok in continuation {
            let id = *self.index.get(*tok)?;
            let succ = self.lookup(&history)?;
            let count = succ.entries.binary_search_by_key(&id, |e| e.0).ok().map(|i| succ.entries[i].1)?;
            total += (count as f64 / succ.total as f64).ln();
            history.push(Some(id));
        }
        Some(total)
    }

    /// Highest-count successor at each step; ties go to the smallest token.
    pub fn greedy<'a, I>(&self, prompt: I, max_new_tokens: usize) -> Scored
    where
        I: IntoIterator<Item = &'a str>,
    {
        self.greedy_from(self.history_of(prompt), max_new_tokens)
    }

    fn greedy_from(&self, mut history: Vec<Option<TokenId>>, max_new_tokens: usize) -> Scored {
        let mut ids = Vec::new();
        let mut log_prob = 0.0;
        while ids.len() < max_new_tokens {
            let Some(succ) = self.lookup(&history) else { break };
            let &(id, count) = succ
                .entries
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("recorded contexts have successors");
            log_prob += (count as f64 / succ.total as f64).ln();
            ids.push(id);
            history.push(Some(id));
            if self.newline[id as usize] {
                break;
            }
        }
        self.finish(ids, log_prob)
    }

    /// Beam search over raw summed log-probabilities. The greedy path is
    /// scored alongside and returned if it beats every beam hypothesis, so
    /// the result is never worse than greedy decoding.
    pub fn beam<'a, I>(&self, prompt: I, max_new_tokens: usize, width: usize) -> Scored
    where
        I: IntoIterator<Item = &'a str>,
    {
        let history = self.history_of(prompt);
        let width = width.max(1);
        let mut beams = vec![Hypothesis {
            ids: Vec::new(),
            score: 0.0,
            done: max_new_tokens == 0,
        }];
        while beams.iter().any(|h| !h.done) {
            let mut candidates: Vec<Hypothesis> = Vec::new();
            for hyp in &beams {
                if hyp.done {
                    candidates.push(hyp.clone());
                    continue;
                }
                let Some(succ) = self.lookup(&Self::extend(&history, &hyp.ids)) else {
                    candidates.push(Hypothesis {
                        done: true,
                        ..hyp.clone()
                    });
                    continue;
                };
                // only a hypothesis' own top `width` extensions can survive the cut
                let mut top: Vec<(TokenId, u64)> = succ.entries.clone();
                let by_rank = |a: &(TokenId, u64), b: &(TokenId, u64)| b.1.cmp(&a.1).then(a.0.cmp(&b.0));
                if top.len() > width {
                    top.select_nth_unstable_by(width - 1, by_rank);
                    top.truncate(width);
                }
                for (id, count) in top {
                    let mut ids = hyp.ids.clone();
                    ids.push(id);
                    let done = self.newline[id as usize] || ids.len() >= max_new_tokens;
                    candidates.push(Hypothesis {
                        ids,
                        score: hyp.score + (count as f64 / succ.total as f64).ln(),
                        done,
                    });
                }
            }
            candidates.sort_by(Self::rank);
            candidates.truncate(width);
            beams = candidates;
        }
        let best = beams.into_iter().min_by(Self::rank).expect("beam is never empty");
        let greedy = self.greedy_from(history, max_new_tokens);
        if greedy.log_prob > best.score {
            greedy
        } else {
            self.finish(best.ids, best.score)
        }
    }

    fn rank(a: &Hypothesis, b: &Hypothesis) -> std::cmp::Ordering {
        b.score.total_cmp(&a.score).then_with(|| a.ids.cmp(&b.ids))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(self.order as u32)?;
        w.write_u32::<LittleEndian>(self.vocab.len() as u32)?;
        for t in &self.vocab {
            w.write_u32::<LittleEndian>(t.len() as u32)?;
            w.write_all(t.as_bytes())?;
        }
        for table in &self.tables {
            let mut keys: Vec<&Vec<TokenId>> = table.keys().collect();
            keys.sort_unstable();
            w.write_u64::<LittleEndian>(keys.len() as u64)?;
            for key in keys {
                for &id in key {
                    w.write_u32::<LittleEndian>(id)?;
                }
                let succ = &table[key];
                w.write_u32::<LittleEndian>(succ.entries.len() as u32)?;
                for &(id, n) in &succ.entries {
                    w.write_u32::<LittleEndian>(id)?;
                    w.write_u64::<LittleEndian>(n)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ModelFileError> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ModelFileError::BadMagic);
        }
        let order = r.read_u32::<LittleEndian>()? as usize;
        if order < 2 {
            return Err(ModelFileError::Corrupt(format!("order {order}")));
        }
        let n_vocab = r.read_u32::<LittleEndian>()? as usize;
        let mut vocab = Vec::with_capacity(n_vocab.min(1 << 20));
        for _ in 0..n_vocab {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            vocab.push(String::from_utf8(buf).map_err(|e| ModelFileError::Corrupt(e.to_string()))?);
        }
        if vocab.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelFileError::Corrupt("vocabulary not sorted".into()));
        }
        let check = |id: u32| -> Result<u32, ModelFileError> {
            if (id as usize) < n_vocab {
                Ok(id)
            } else {
                Err(ModelFileError::Corrupt(format!("token id {id} out of range")))
            }
        };
        let mut tables = Vec::with_capacity(order - 1);
        for ctx_len in 1..order {
            let n = r.read_u64::<LittleEndian>()?;
            let mut table = HashMap::new();
            for _ in 0..n {
                let ctx = (0..ctx_len)
                    .map(|_| check(r.read_u32::<LittleEndian>()?))
                    .collect::<Result<Vec<_>, _>>()?;
                let n_succ = r.read_u32::<LittleEndian>()? as usize;
                let mut entries = Vec::with_capacity(n_succ.min(1 << 16));
                for _ in 0..n_succ {
                    entries.push((check(r.read_u32::<LittleEndian>()?)?, r.read_u64::<LittleEndian>()?));
                }
                let total = entries.iter().map(|e| e.1).sum::<u64>();
                if total == 0 {
                    return Err(ModelFileError::Corrupt("context with zero count".into()));
                }
                table.insert(ctx, Successors { entries, total });
            }
            tables.push(table);
        }
        Ok(Self::assemble(order, vocab, tables))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ModelFileError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ModelFileError> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

impl CompletionBackend for NGramModel {
    fn id(&self) -> &str {
        "ngram"
    }

    fn fingerprint(&self) -> String {
        format!("ngram{}:{}", self.order, self.fingerprint)
    }

    fn generate(&self, _request_id: &str, input: &LcmInput, params: &DecodeParams) -> Result<Completion, BackendError> {
        params.validate()?;
        if self.is_empty() {
            return Err(BackendError::EmptyVocabulary);
        }
        let prompt = input.before_tokens.iter().map(|t| t.text.as_str());
        let strategy = params.strategy_for(input.len());
        let out = match strategy {
            Strategy::Greedy => self.greedy(prompt, params.max_new_tokens),
            Strategy::Beam { width } => self.beam(prompt, params.max_new_tokens, width),
        };
        Ok(Completion::one_line(&out.text(), strategy, out.tokens.len(), self.id()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> Vec<(String, String)> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("f{i}.py"), t.to_string()))
            .collect()
    }

    #[test]
    fn bigram_table_by_hand() {
        let m = build_ngram(&corpus(&["a b c"]), 2);
        assert_eq!(m.successors(&["a"]), Some(vec![(" ", 1)]));
        assert_eq!(m.successors(&[" "]), Some(vec![("b", 1), ("c", 1)]));
        assert_eq!(m.successors(&["b"]), Some(vec![(" ", 1)]));
        assert_eq!(m.successors(&["c"]), None);
    }

    #[test]
    fn windows_do_not_cross_files() {
        let m = build_ngram(&corpus(&["a", "b"]), 2);
        assert_eq!(m.successors(&["a"]), None);
    }

    #[test]
    fn doubled_corpus_doubles_counts() {
        let one = build_ngram(&corpus(&["x = foo(y)\nx = bar(y)\n"]), 3);
        let two = build_ngram(&corpus(&["x = foo(y)\nx = bar(y)\n", "x = foo(y)\nx = bar(y)\n"]), 3);
        assert_eq!(two.successors(&["=", " "]), Some(vec![("bar", 2), ("foo", 2)]));
        assert_eq!(
            one.greedy(["x", " ", "=", " "], 10).text(),
            two.greedy(["x", " ", "=", " "], 10).text()
        );
        // tie between bar and foo goes to the lexicographically smaller token
        assert_eq!(one.greedy(["x", " ", "=", " "], 10).text(), "bar(y)\n");
    }

    #[test]
    fn import_line_completion() {
        let text = "import numpy as np\n".repeat(20);
        let m = build_ngram(&corpus(&[&text]), 4);
        let prompt = ["import", " ", "numpy", " "];
        assert_eq!(m.greedy(prompt, 100).text(), "as np\n");
        assert_eq!(m.beam(prompt, 100, 3).text(), "as np\n");
    }

    #[test]
    fn empty_model() {
        let m = build_ngram(&[], 4);
        assert!(m.is_empty());
        let input = LcmInput {
            metadata_tokens: vec![],
            before_tokens: vec![],
            after_tokens: vec![],
            total_budget: 10,
        };
        assert_eq!(
            m.generate("r", &input, &DecodeParams::default()),
            Err(BackendError::EmptyVocabulary)
        );
    }

    #[test]
    fn unseen_context_yields_empty_completion() {
        let m = build_ngram(&corpus(&["a.b\n"]), 3);
        assert_eq!(m.greedy(["zzz"], 10).tokens.len(), 0);
        assert_eq!(m.beam(["zzz"], 10, 3).tokens.len(), 0);
    }

    #[test]
    fn backs_off_to_shorter_context() {
        let m = build_ngram(&corpus(&["q.r\n"]), 4);
        // "zzz" is unknown but "." alone is a known 1-token context
        assert_eq!(m.greedy(["zzz", "."], 10).text(), "r\n");
    }

    #[test]
    fn max_new_tokens_caps_generation() {
        let m = build_ngram(&corpus(&["a a a a a a a a a a a\n"]), 2);
        let out = m.greedy(["a"], 3);
        assert_eq!(out.tokens.len(), 3);
        assert_eq!(m.beam(["a"], 3, 3).tokens.len(), 3);
    }

    #[test]
    fn file_round_trip() {
        let m = build_ngram(&corpus(&["def f(x):\n    return x.y\n", "import os\n"]), 4);
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..5], b"NGRM1");
        let back = NGramModel::read_from(&bytes[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.fingerprint(), m.fingerprint());
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(matches!(NGramModel::read_from(&b"NGRM2...."[..]), Err(ModelFileError::BadMagic)));
        assert!(NGramModel::read_from(&b"NGRM1"[..]).is_err());
    }

    #[test]
    fn score_matches_greedy() {
        let m = build_ngram(&corpus(&["x = a(b)\nx = a.c\ny = a(b)\n"]), 3);
        let g = m.greedy(["x", " ", "="], 20);
        let toks: Vec<&str> = g.tokens.iter().map(String::as_str).collect();
        let s = m.score(["x", " ", "="], &toks).unwrap();
        assert!((s - g.log_prob).abs() < 1e-12);
    }
}
