//! BLEU values produced by `oracles/bleu_reference.py`, an independent
//! implementation of the same smoothed sentence BLEU.

use gw_core::backtest::{bleu, bleu_tokens};

const GOLDEN: &[(&str, &str, f64)] = &[
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

#[test]
fn matches_reference_implementation() {
    for &(cand, reference, want) in GOLDEN {
        let got = bleu(cand, reference).unwrap();
        assert!((got - want).abs() < 1e-6, "bleu({cand:?}, {reference:?}) = {got}, want {want}");
    }
}

#[test]
fn identity_and_disjoint() {
    assert_eq!(bleu("return x + y\n", "return x + y\n").unwrap(), 1.0);
    assert!(bleu("alpha beta gamma delta", "one two three four").unwrap() < 0.05);
}

#[test]
fn blank_reference_is_an_error() {
    assert!(bleu("x", "  \n").is_err());
    assert!(bleu_tokens(" \t\n").is_empty());
}
