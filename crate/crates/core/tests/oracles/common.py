"""Helpers shared by the oracle scripts.

The generator is splitmix64, mirrored in tests/common/mod.rs so both sides
build identical synthetic inputs from a seed.
"""

import bisect
import json
import os

MASK64 = (1 << 64) - 1
FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")


class SplitMix:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n):
        return self.next_u64() % n

    def unit(self):
        return (self.next_u64() >> 11) * 2.0**-53

    def grid(self, scale=512, span=1000):
        """A value k / scale with |k| <= span, exact in f32."""
        return (self.below(2 * span + 1) - span) / scale


def zipf_cdf(vocab_size):
    cum, total = [], 0.0
    for k in range(1, vocab_size + 1):
        total += 1.0 / k
        cum.append(total)
    return cum


def zipf_documents(seed, vocab_size, tokens, doc_len, offset=0):
    """Documents of words `w<rank>` drawn from a rank^-1 law."""
    rng = SplitMix(seed)
    cum = zipf_cdf(vocab_size)
    total = cum[-1]
    docs, current = [], []
    for _ in range(tokens):
        u = rng.unit() * total
        k = bisect.bisect_right(cum, u)
        current.append("w%d" % (min(k, vocab_size - 1) + 1 + offset))
        if len(current) == doc_len:
            docs.append(" ".join(current))
            current = []
    if current:
        docs.append(" ".join(current))
    return docs


def write_json(name, value):
    path = os.path.join(FIXTURES, name)
    with open(path, "w") as f:
        json.dump(value, f, indent=1, sort_keys=True)
        f.write("\n")
    print("wrote", os.path.relpath(path))


def read_json(name):
    with open(os.path.join(FIXTURES, name)) as f:
        return json.load(f)


def write_text(name, text):
    path = os.path.join(FIXTURES, name)
    with open(path, "w") as f:
        f.write(text)
    print("wrote", os.path.relpath(path))
