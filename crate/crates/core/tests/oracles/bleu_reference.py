"""Independent sentence-level BLEU used to freeze the golden values in
tests/bleu_golden.rs.

Tokens: code tokens with blanks dropped. Orders 1..min(4, |cand|, |ref|),
uniform weights, brevity penalty, and for orders >= 2 a zero match count is
replaced by 1 / (candidate n-grams + 1).

Run: python3 bleu_reference.py
"""
import math
import re
from collections import Counter

TOKEN = re.compile(r"\r\n|[\n\r]|[(.=,\[:]|\w+|[+\-*/%<>!&|^~?@;]+|[^\S\r\n]+|.", re.S)


def code_tokens(s):
    return [t for t in TOKEN.findall(s) if t.strip()]


def ngrams(toks, n):
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def bleu(cand, ref):
    c, r = code_tokens(cand), code_tokens(ref)
    if not r:
        raise ValueError("empty reference")
    if not c:
        return 0.0
    order = min(4, len(c), len(r))
    log_sum = 0.0
    for n in range(1, order + 1):
        cn, rn = ngrams(c, n), ngrams(r, n)
        matched = sum(min(k, rn[g]) for g, k in cn.items())
        total = sum(cn.values())
        if matched == 0:
            if n == 1:
                return 0.0
            p = 1.0 / (total + 1)
        else:
            p = matched / total
        log_sum += math.log(p) / order
    bp = 1.0 if len(c) > len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.exp(log_sum)


FIXTURES = [
    ("x = foo(a, b)\n", "x = foo(a, b)\n"),
    ("x = foo(a, c)\n", "x = foo(a, b)\n"),
    ("return self.value\n", "return self.values[0]\n"),
    ("np.zeros((3, 3))\n", "np.ones((3, 3), dtype=float)\n"),
    ("for i in range(n):\n", "for j in range(len(xs)):\n"),
    ("std::vector<int> v;\n", "std::vector<int> values;\n"),
    ("if (x > 0) {\n", "while (y < 10) {\n"),
    ("a b c d e f", "a b c d e f g h"),
    ("print(x)", "print(x, y)"),
    ("foo bar", "baz qux"),
    ("ab", "ab"),
    ("a.b", "a.b.c.d.e"),
]

if __name__ == "__main__":
    for cand, ref in FIXTURES:
        print(f"({cand!r}, {ref!r}, {bleu(cand, ref)!r}),")
