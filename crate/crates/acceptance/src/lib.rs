//! Reference implementations the acceptance run checks the system against.
//! They share no code with the crates under test beyond plain data types.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng;

/// Segments of `metadata ++ before ++ <mask> ++ after ++ <mask> ++ target`.
#[derive(Debug, PartialEq, Eq)]
pub struct Segments {
    pub metadata: String,
    pub before: String,
    pub after: String,
    pub target: String,
}

pub fn parse_segments(rendered: &str, mask: &str) -> Option<Segments> {
    let mut metadata_end = 0;
    for line in rendered.split_inclusive('\n') {
        let is_meta = ["# language: ", "# path: ", "# kernel: "].iter().any(|p| line.starts_with(p))
            && line.ends_with('\n');
        if !is_meta {
            break;
        }
        metadata_end += line.len();
    }
    let parts: Vec<&str> = rendered[metadata_end..].split(mask).collect();
    let [before, after, target] = parts[..] else { return None };
    Some(Segments {
        metadata: rendered[..metadata_end].to_owned(),
        before: before.to_owned(),
        after: after.to_owned(),
        target: target.to_owned(),
    })
}

/// Code-like text of `n` fragments.
pub fn random_code<R: Rng>(rng: &mut R, n: usize) -> String {
    const FRAGMENTS: &[&str] = &[
        "foo", "bar", "x", "self", "42", " ", "  ", "    ", "\n", "\n", "(", ")", ".", "=", ",", "[", "]", ":", "+",
        "return", "if", "\"", "{", "}", "é",
    ];
    (0..n).map(|_| *FRAGMENTS.choose(rng).unwrap()).collect()
}

/// Count-based n-gram scorer over single-character tokens with longest
/// suffix back-off, and exhaustive search for the best terminated path.
pub struct BruteNgram {
    order: usize,
    counts: HashMap<Vec<char>, HashMap<char, u64>>,
}

impl BruteNgram {
    pub fn new(files: &[String], order: usize) -> Self {
        let mut counts: HashMap<Vec<char>, HashMap<char, u64>> = HashMap::new();
        for f in files {
            let cs: Vec<char> = f.chars().collect();
            for end in 1..cs.len() {
                for n in 1..order.min(end + 1) {
                    *counts.entry(cs[end - n..end].to_vec()).or_default().entry(cs[end]).or_default() += 1;
                }
            }
        }
        Self { order, counts }
    }

    fn next(&self, history: &[char]) -> Option<&HashMap<char, u64>> {
        let max = (self.order - 1).min(history.len());
        (1..=max).rev().find_map(|n| self.counts.get(&history[history.len() - n..]))
    }

    pub fn score(&self, prompt: &[char], cont: &[char]) -> Option<f64> {
        let mut h = prompt.to_vec();
        let mut lp = 0.0;
        for &c in cont {
            let succ = self.next(&h)?;
            let total: u64 = succ.values().sum();
            lp += (*succ.get(&c)? as f64 / total as f64).ln();
            h.push(c);
        }
        Some(lp)
    }

    pub fn best(&self, prompt: &[char], max_len: usize) -> f64 {
        fn go(o: &BruteNgram, h: &mut Vec<char>, len: usize, max: usize, lp: f64, best: &mut f64) {
            let succ = match o.next(h) {
                Some(s) if len < max => s,
                _ => {
                    *best = best.max(lp);
                    return;
                }
            };
            let total: u64 = succ.values().sum();
            for (&c, &n) in succ {
                let lp = lp + (n as f64 / total as f64).ln();
                if c == '\n' || len + 1 == max {
                    *best = best.max(lp);
                } else {
                    h.push(c);
                    go(o, h, len + 1, max, lp, best);
                    h.pop();
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        go(self, &mut prompt.to_vec(), 0, max_len, 0.0, &mut best);
        best
    }
}

/// Python-reference BLEU values for the golden fixture.
pub const BLEU_GOLDEN: &[(&str, &str, f64)] = &[
    ("x = foo(a, b)\n", "x = foo(a, b)\n", 1.0),
    ("x = foo(a, c)\n", "x = foo(a, b)\n", 0.7071067811865475),
    ("return self.value\n", "return self.values[0]\n", 0.2808708327044614),
    ("np.zeros((3, 3))\n", "np.ones((3, 3), dtype=float)\n", 0.4013916415106911),
    ("for i in range(n):\n", "for j in range(len(xs)):\n", 0.21126865312555418),
    ("std::vector<int> v;\n", "std::vector<int> values;\n", 0.7506238537503395),
    ("if (x > 0) {\n", "while (y < 10) {\n", 0.22089591134157885),
    ("a b c d e f", "a b c d e f g h", 0.7165313105737893),
    ("print(x)", "print(x, y)", 0.38753858253732953),
    ("foo bar", "baz qux", 0.0),
    ("ab", "ab", 1.0),
    ("a.b", "a.b.c.d.e", 0.1353352832366127),
];
