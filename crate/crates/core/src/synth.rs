//! Deterministic synthetic source corpus for backtests and benchmarks.
//!
//! Files mix recurring boilerplate (imports, includes, logging calls) with
//! randomly named functions, so an n-gram model trained on part of the
//! corpus can complete the boilerplate but not the novel lines.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backtest::CorpusFile;

const NOUNS: &[&str] = &[
    "user", "item", "order", "config", "buffer", "record", "node", "edge", "value", "result", "request", "session",
    "cache", "index", "entry", "token", "batch", "frame", "event", "metric",
];
const VERBS: &[&str] = &[
    "load", "parse", "build", "update", "compute", "fetch", "merge", "split", "render", "flush", "encode", "decode",
];

fn ident(rng: &mut ChaCha8Rng) -> String {
    let verb = VERBS.choose(rng).unwrap();
    let noun = NOUNS.choose(rng).unwrap();
    format!("{verb}_{noun}{}", rng.random_range(0..1000))
}

fn noun(rng: &mut ChaCha8Rng) -> &'static str {
    NOUNS.choose(rng).unwrap()
}

fn python_file(rng: &mut ChaCha8Rng, target_bytes: usize) -> String {
    let mut s = String::from("import os\nimport sys\nimport logging\nimport numpy as np\n\nlogger = logging.getLogger(__name__)\n\n");
    while s.len() < target_bytes {
        let f = ident(rng);
        let a = noun(rng);
        let b = noun(rng);
        let _ = writeln!(s, "\ndef {f}({a}, {b}=None):");
        let _ = writeln!(s, "    \"\"\"{} the {a}.\"\"\"", f.replace('_', " "));
        let _ = writeln!(s, "    if {b} is None:");
        let _ = writeln!(s, "        {b} = {{}}");
        for _ in 0..rng.random_range(1..4) {
            match rng.random_range(0..5) {
                0 => {
                    let _ = writeln!(s, "    logger.info(\"{f}: %s\", {a})");
                }
                1 => {
                    let _ = writeln!(s, "    {a} = np.asarray({a}, dtype=np.float32)");
                }
                2 => {
                    let _ = writeln!(s, "    path = os.path.join({b}.get(\"root\", \".\"), \"{a}.json\")");
                }
                3 => {
                    let n = rng.random_range(1..64);
                    let _ = writeln!(s, "    for i in range({n}):\n        {b}[i] = {a}[i % len({a})]");
                }
                _ => {
                    let _ = writeln!(s, "    {b}[\"{}\"] = {}({a})", noun(rng), ident(rng));
                }
            }
        }
        let _ = writeln!(s, "    return {b}");
    }
    s.push_str("\n\nif __name__ == \"__main__\":\n    sys.exit(main())\n");
    s
}

fn cpp_file(rng: &mut ChaCha8Rng, target_bytes: usize) -> String {
    let mut s = String::from(
        "#include <string>\n#include <vector>\n#include <memory>\n#include \"common/logging.h\"\n\nnamespace app {\n",
    );
    while s.len() < target_bytes {
        let f = ident(rng);
        let a = noun(rng);
        let _ = writeln!(s, "\nstd::vector<int> {f}(const std::vector<int>& {a}) {{");
        let _ = writeln!(s, "  std::vector<int> out;");
        let _ = writeln!(s, "  out.reserve({a}.size());");
        for _ in 0..rng.random_range(1..4) {
            match rng.random_range(0..4) {
                0 => {
                    let _ = writeln!(s, "  LOG(INFO) << \"{f}\" << {a}.size();");
                }
                1 => {
                    let _ = writeln!(s, "  for (size_t i = 0; i < {a}.size(); ++i) {{\n    out.push_back({a}[i]);\n  }}");
                }
                2 => {
                    let k = rng.random_range(2..9);
                    let _ = writeln!(s, "  if (out.size() > {k}) {{\n    out.resize({k});\n  }}");
                }
                _ => {
                    let _ = writeln!(s, "  auto {} = std::make_unique<int>({});", noun(rng), rng.random_range(0..100));
                }
            }
        }
        let _ = writeln!(s, "  return out;\n}}");
    }
    s.push_str("\n}  // namespace app\n");
    s
}

/// Generates `files_per_language` Python and C++ files of roughly
/// `file_bytes` each, deterministically in `seed`.
pub fn synth_corpus(files_per_language: usize, file_bytes: usize, seed: u64) -> Vec<CorpusFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(files_per_language * 2);
    for i in 0..files_per_language {
        out.push(CorpusFile {
            path: format!("py/mod_{i:04}.py"),
            text: python_file(&mut rng, file_bytes),
        });
        out.push(CorpusFile {
            path: format!("cpp/unit_{i:04}.cpp"),
            text: cpp_file(&mut rng, file_bytes),
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out
}

pub fn write_corpus(files: &[CorpusFile], root: &Path) -> std::io::Result<()> {
    for f in files {
        let path = root.join(&f.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, &f.text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let a = synth_corpus(3, 2000, 7);
        let b = synth_corpus(3, 2000, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|f| f.text.len() >= 2000 && f.text.len() < 3000));
        assert_ne!(synth_corpus(3, 2000, 8), a);
    }
}
