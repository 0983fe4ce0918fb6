//! Masked-line backtesting: draw one end-of-line target per corpus file,
//! hide a random stretch of code after it, ask a completer for the line and
//! score Exact Match and sentence-level BLEU per language.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PromptConfig;
use crate::error::BacktestError;
use crate::pipeline::{Completer, CompletionRequest};
use crate::prompt::{frame_inference_tokens, select_training_mask, FileMeta, Language};
use crate::tokenize::{detokenize, tokenize, TriggerSet};

pub const REPORT_SCHEMA: &str = "gw-backtest/1";
pub const DEFAULT_GAP_MAX: usize = 50;
/// Runs with a larger errored fraction should fail the CLI.
pub const MAX_ERROR_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub text: String,
}

/// Loads every file under `root` whose extension maps to a known language,
/// sorted by relative path. Non-UTF-8 files are skipped.
pub fn load_corpus(root: &Path) -> Result<Vec<CorpusFile>, BacktestError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let ty = entry.file_type()?;
            if ty.is_dir() {
                walk(&entry.path(), out)?;
            } else if ty.is_file() {
                out.push(entry.path());
            }
        }
        Ok(())
    }
    let mut paths = Vec::new();
    walk(root, &mut paths)?;
    let mut files = Vec::new();
    for p in paths {
        let rel = p
            .strip_prefix(root)
            .unwrap_or(&p)
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if Language::from_path(&rel).is_none() {
            continue;
        }
        match std::fs::read_to_string(&p) {
            Ok(text) => files.push(CorpusFile { path: rel, text }),
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                tracing::warn!(path = %rel, "skipping non-UTF-8 file");
            }
            Err(e) => return Err(e.into()),
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(files)
}

fn hash64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Filepath-hash partition: a stable fraction `frac` of paths is held out.
pub fn in_holdout(path: &str, frac: f64) -> bool {
    (hash64(&[path.as_bytes()]) as f64) < frac * (u64::MAX as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleOptions {
    pub gap_max: usize,
    pub prompt: PromptConfig,
    /// When set, only files in the filepath-hash holdout are sampled.
    pub holdout_frac: Option<f64>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            gap_max: DEFAULT_GAP_MAX,
            prompt: PromptConfig::default(),
            holdout_frac: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSample {
    pub sample_id: String,
    pub file_path: String,
    pub language: Language,
    pub before: String,
    pub target: String,
    pub hidden_gap: String,
    pub after: String,
    pub seed: u64,
    /// Byte offset of `before` within the source file.
    pub region_start: usize,
}

impl MaskedSample {
    /// `before ++ target ++ hidden_gap ++ after`.
    pub fn reconstruct(&self) -> String {
        [&self.before, &self.target, &self.hidden_gap, &self.after]
            .iter()
            .map(|s| s.as_str())
            .collect()
    }

    pub fn request(&self) -> CompletionRequest {
        CompletionRequest {
            request_id: self.sample_id.clone(),
            file_path: self.file_path.clone(),
            language: self.language.to_string(),
            before: self.before.clone(),
            after: self.after.clone(),
            kernel: None,
        }
    }
}

fn sample_file(
    file: &CorpusFile,
    language: &Language,
    seed: u64,
    opts: &SampleOptions,
) -> Result<MaskedSample, crate::error::PromptError> {
    let cfg = &opts.prompt;
    let tokens = tokenize(&file.text, &cfg.triggers);
    let span = select_training_mask(&tokens, seed, cfg.max_target_tokens)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let gap = rng.random_range(0..=opts.gap_max).min(tokens.len() - span.end);
    let gap_end = span.end + gap;
    let meta = FileMeta {
        file_path: file.path.clone(),
        language: language.clone(),
        kernel: None,
    };
    let input = frame_inference_tokens(&meta, tokens[..span.start].to_vec(), tokens[gap_end..].to_vec(), cfg)?;
    let region_start = input
        .before_tokens
        .first()
        .map_or(tokens[span.start].byte_offset, |t| t.byte_offset);
    Ok(MaskedSample {
        sample_id: String::new(),
        file_path: file.path.clone(),
        language: language.clone(),
        before: input.before_text(),
        target: detokenize(&tokens[span.start..span.end]),
        hidden_gap: detokenize(&tokens[span.end..gap_end]),
        after: input.after_text(),
        seed,
        region_start,
    })
}

/// Draws `n_per_language` samples per language, one per file, visiting
/// files in a seeded uniform order. Files without a maskable line are
/// skipped with a warning.
pub fn make_samples(
    corpus: &[CorpusFile],
    languages: &[Language],
    n_per_language: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<Vec<MaskedSample>, BacktestError> {
    let mut out = Vec::new();
    for language in languages {
        let mut files: Vec<&CorpusFile> = corpus
            .iter()
            .filter(|f| Language::from_path(&f.path).as_ref() == Some(language))
            .filter(|f| opts.holdout_frac.is_none_or(|frac| in_holdout(&f.path, frac)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hash64(&[&seed.to_le_bytes(), language.as_str().as_bytes()]));
        files.shuffle(&mut rng);
        let mut taken = 0;
        for file in files {
            if taken == n_per_language {
                break;
            }
            let file_seed = hash64(&[&seed.to_le_bytes(), file.path.as_bytes()]);
            match sample_file(file, language, file_seed, opts) {
                Ok(mut s) => {
                    s.sample_id = format!("{}-{:05}", language, taken);
                    out.push(s);
                    taken += 1;
                }
                Err(e) => tracing::warn!(path = %file.path, error = %e, "skipping file"),
            }
        }
        if taken < n_per_language {
            return Err(BacktestError::CorpusTooSmall {
                language: language.to_string(),
                found: taken,
                wanted: n_per_language,
            });
        }
    }
    Ok(out)
}

fn normalize_for_em(s: &str) -> String {
    let s = s
        .strip_suffix("\r\n")
        .or_else(|| s.strip_suffix('\n'))
        .unwrap_or(s);
    s.split('\n')
        .map(|l| l.trim_end())
        .collect::<Vec<_>>()
        .join("\n")
}

/// 1 if the strings match. Unless `strict`, one trailing newline is dropped
/// from each and trailing whitespace is trimmed per line first.
pub fn exact_match(candidate: &str, reference: &str, strict: bool) -> u8 {
    let equal = if strict {
        candidate == reference
    } else {
        normalize_for_em(candidate) == normalize_for_em(reference)
    };
    u8::from(equal)
}

/// Non-blank code tokens, the unit BLEU counts.
pub fn bleu_tokens(s: &str) -> Vec<String> {
    tokenize(s, &TriggerSet::default())
        .into_iter()
        .filter(|t| !t.kind.is_blank())
        .map(|t| t.text)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuBreakdown {
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Sentence-level BLEU with its per-order precisions.
pub fn bleu_breakdown(candidate: &str, reference: &str) -> Result<BleuBreakdown, BacktestError> {
    let cand = bleu_tokens(candidate);
    let refr = bleu_tokens(reference);
    if refr.is_empty() {
        return Err(BacktestError::EmptyReference);
    }
    let mut out = BleuBreakdown {
        score: 0.0,
        precisions: Vec::new(),
        brevity_penalty: 0.0,
        candidate_len: cand.len(),
        reference_len: refr.len(),
    };
    if cand.is_empty() {
        return Ok(out);
    }
    let max_order = 4.min(cand.len()).min(refr.len());
    for n in 1..=max_order {
        let c = ngram_counts(&cand, n);
        let r = ngram_counts(&refr, n);
        let total: usize = c.values().sum();
        let matched: usize = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
        let p = if matched > 0 {
            matched as f64 / total as f64
        } else if n == 1 {
            0.0
        } else {
            1.0 / (total as f64 + 1.0)
        };
        out.precisions.push(p);
    }
    out.brevity_penalty = if cand.len() > refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    if out.precisions[0] > 0.0 {
        let mean_log = out.precisions.iter().map(|p| p.ln()).sum::<f64>() / max_order as f64;
        out.score = out.brevity_penalty * mean_log.exp();
    }
    Ok(out)
}

/// Sentence-level BLEU in `[0, 1]`.
pub fn bleu(candidate: &str, reference: &str) -> Result<f64, BacktestError> {
    Ok(bleu_breakdown(candidate, reference)?.score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub language: String,
    pub exact_match: u8,
    pub bleu: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScore {
    pub language: String,
    /// Samples that were scored (errored ones excluded).
    pub n: usize,
    pub errored: usize,
    pub exact_match_pct: f64,
    pub bleu_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub n_per_language: usize,
    pub budget: usize,
    pub split: f64,
    pub gap_max: usize,
    pub strict_em: bool,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub config: ReportConfig,
    pub languages: Vec<LanguageScore>,
    pub overall: LanguageScore,
    /// Mean target length over mean context length, in characters.
    pub target_context_ratio: f64,
    pub mean_target_chars: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub strict_em: bool,
    /// Parallel scoring workers; 0 or 1 scores sequentially.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            strict_em: false,
            workers: 4,
        }
    }
}

fn score_one(sample: &MaskedSample, completer: &dyn Completer, strict: bool) -> SampleScore {
    let mut score = SampleScore {
        sample_id: sample.sample_id.clone(),
        language: sample.language.to_string(),
        exact_match: 0,
        bleu: 0.0,
        error: None,
    };
    match completer.complete(&sample.request()) {
        Ok(resp) => {
            score.exact_match = exact_match(&resp.completion_text, &sample.target, strict);
            match bleu(&resp.completion_text, &sample.target) {
                Ok(b) => score.bleu = b,
                Err(e) => score.error = Some(e.to_string()),
            }
        }
        Err(e) => score.error = Some(e.to_string()),
    }
    score
}

/// Scores every sample independently. Results are gathered by sample index,
/// so the report does not depend on scheduling.
pub fn score_samples(samples: &[MaskedSample], completer: &dyn Completer, opts: &RunOptions) -> Vec<SampleScore> {
    #[cfg(feature = "parallel")]
    if opts.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .expect("thread pool");
        return pool.install(|| {
            samples
                .par_iter()
                .map(|s| score_one(s, completer, opts.strict_em))
                .collect()
        });
    }
    samples.iter().map(|s| score_one(s, completer, opts.strict_em)).collect()
}

fn aggregate(language: &str, scores: &[&SampleScore]) -> LanguageScore {
    let ok: Vec<&&SampleScore> = scores.iter().filter(|s| s.error.is_none()).collect();
    let n = ok.len();
    let pct = |sum: f64| if n == 0 { 0.0 } else { 100.0 * sum / n as f64 };
    LanguageScore {
        language: language.to_owned(),
        n,
        errored: scores.len() - n,
        exact_match_pct: pct(ok.iter().map(|s| f64::from(s.exact_match)).sum()),
        bleu_pct: pct(ok.iter().map(|s| s.bleu).sum()),
    }
}

/// Scores `samples` with `completer` and aggregates per language.
pub fn run_backtest(
    samples: &[MaskedSample],
    completer: &dyn Completer,
    config: ReportConfig,
    opts: &RunOptions,
) -> EvalReport {
    let scores = score_samples(samples, completer, opts);
    build_report(samples, &scores, config)
}

pub fn build_report(samples: &[MaskedSample], scores: &[SampleScore], config: ReportConfig) -> EvalReport {
    let mut by_lang: BTreeMap<&str, Vec<&SampleScore>> = BTreeMap::new();
    for s in scores {
        by_lang.entry(s.language.as_str()).or_default().push(s);
    }
    let languages: Vec<LanguageScore> = by_lang.iter().map(|(l, s)| aggregate(l, s)).collect();
    let overall = aggregate("overall", &scores.iter().collect::<Vec<_>>());

    let count = samples.len().max(1) as f64;
    let mean_target = samples.iter().map(|s| s.target.chars().count() as f64).sum::<f64>() / count;
    let mean_context = samples
        .iter()
        .map(|s| (s.before.chars().count() + s.after.chars().count()) as f64)
        .sum::<f64>()
        / count;
    let ratio = if mean_context > 0.0 { mean_target / mean_context } else { 0.0 };
    let mut warnings = Vec::new();
    if !samples.is_empty() && !(0.005..=0.15).contains(&ratio) {
        warnings.push(format!(
            "mean target is {:.1}% of the context; typical corpora sit near 3%",
            ratio * 100.0
        ));
    }
    if overall.errored > 0 {
        warnings.push(format!("{} of {} samples errored", overall.errored, scores.len()));
    }
    EvalReport {
        schema: REPORT_SCHEMA.to_owned(),
        config,
        languages,
        overall,
        target_context_ratio: ratio,
        mean_target_chars: mean_target,
        warnings,
    }
}

impl EvalReport {
    pub fn error_fraction(&self) -> f64 {
        let total = self.overall.n + self.overall.errored;
        if total == 0 {
            0.0
        } else {
            self.overall.errored as f64 / total as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Metric rows by language columns.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<22}", "");
        for l in &self.languages {
            let _ = write!(s, "{:>10}", l.language);
        }
        s.push('\n');
        for (name, bleu) in [("Exact Match (%)", false), ("BLEU (%)", true)] {
            let _ = write!(s, "{name:<22}");
            for l in &self.languages {
                let _ = write!(s, "{:>10.1}", if bleu { l.bleu_pct } else { l.exact_match_pct });
            }
            s.push('\n');
        }
        let _ = write!(s, "{:<22}", "n (errored)");
        for l in &self.languages {
            let _ = write!(s, "{:>10}", format!("{} ({})", l.n, l.errored));
        }
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em_identity_and_mismatch() {
        assert_eq!(exact_match("x = 1\n", "x = 1\n", false), 1);
        assert_eq!(exact_match("x = 1", "x = 2", false), 0);
    }

    #[test]
    fn em_normalizes_trailing_whitespace() {
        assert_eq!(exact_match("x = 1  \n", "x = 1\n", false), 1);
        assert_eq!(exact_match("x = 1", "x = 1\n", false), 1);
        assert_eq!(exact_match("x = 1  \n", "x = 1\n", true), 0);
        assert_eq!(exact_match("  x = 1\n", "x = 1\n", false), 0);
    }

    #[test]
    fn bleu_identity_and_disjoint() {
        assert_eq!(bleu("x = foo(a)\n", "x = foo(a)\n").unwrap(), 1.0);
        assert_eq!(bleu("ab", "ab").unwrap(), 1.0);
        assert!(bleu("alpha beta", "gamma delta").unwrap() < 0.05);
        assert_eq!(bleu("", "x").unwrap(), 0.0);
        assert!(matches!(bleu("x", "  \n"), Err(BacktestError::EmptyReference)));
    }

    #[test]
    fn holdout_is_stable_fraction() {
        let held = (0..2000).filter(|i| in_holdout(&format!("src/f{i}.py"), 0.25)).count();
        assert!((400..600).contains(&held), "{held}");
        assert!(in_holdout("x.py", 1.0));
        assert!(!in_holdout("x.py", 0.0));
    }

    #[test]
    fn gap_max_zero_leaves_after_adjacent() {
        let file = CorpusFile {
            path: "a.py".into(),
            text: "import os\nx = os.path.join(a, b)\nprint(x)\n".into(),
        };
        let opts = SampleOptions {
            gap_max: 0,
            ..Default::default()
        };
        let samples = make_samples(std::slice::from_ref(&file), &[Language::new("py").unwrap()], 1, 3, &opts).unwrap();
        let s = &samples[0];
        assert!(s.hidden_gap.is_empty());
        assert!(s.target.ends_with('\n'));
        let end = s.region_start + s.before.len() + s.target.len();
        assert_eq!(&file.text[end..], s.after);
    }

    #[test]
    fn corpus_too_small() {
        let file = CorpusFile {
            path: "a.py".into(),
            text: "x = 1\n".into(),
        };
        let err = make_samples(&[file], &[Language::new("py").unwrap()], 2, 0, &SampleOptions::default()).unwrap_err();
        assert!(matches!(err, BacktestError::CorpusTooSmall { found: 1, wanted: 2, .. }));
    }

    #[test]
    fn report_table_has_rows() {
        let cfg = ReportConfig {
            seed: 7,
            n_per_language: 1,
            budget: 2048,
            split: 0.7,
            gap_max: 50,
            strict_em: false,
            backend_id: "t".into(),
        };
        let scores = vec![SampleScore {
            sample_id: "py-0".into(),
            language: "py".into(),
            exact_match: 1,
            bleu: 1.0,
            error: None,
        }];
        let r = build_report(&[], &scores, cfg);
        assert_eq!(r.overall.exact_match_pct, 100.0);
        let t = r.to_table();
        assert!(t.contains("Exact Match"));
        assert!(t.contains("100.0"));
    }
}
