"""Reference WordPiece trainer and greedy tokenizer.

Recomputes every pair score from scratch each round with exact fractions;
no incremental bookkeeping. Writes the corpus it trains on, the learned
token list and the tokenization of every sentence.
"""

import string
from fractions import Fraction

from common import SplitMix, write_json, write_text

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
WORDS = (
    "the patient lung cell cells tumor tumors showed bronchitis bronchial "
    "airway airways inflammation chronic acute protein proteins receptor "
    "receptors expression increased decreased in of and with was were a "
    "mutation mutations gene genes clinical trial trials therapy treated"
).split()
PUNCT = [",", ".", ";", "(", ")"]
TARGET = 120


def corpus():
    rng = SplitMix(2024)
    lines = []
    for _ in range(50):
        n = 4 + rng.below(9)
        words = []
        for _ in range(n):
            w = WORDS[rng.below(len(WORDS))]
            if rng.below(6) == 0:
                w = w.capitalize()
            words.append(w)
            if rng.below(8) == 0:
                words.append(PUNCT[rng.below(len(PUNCT))])
        lines.append(" ".join(words) + " .")
    return lines


def pre_tokenize(text):
    out = []
    for raw in text.lower().split():
        cur = ""
        for c in raw:
            if c in string.punctuation:
                if cur:
                    out.append(cur)
                    cur = ""
                out.append(c)
            else:
                cur += c
        if cur:
            out.append(cur)
    return out


def train(lines, target):
    counts = {}
    for line in lines:
        for w in pre_tokenize(line):
            counts[w] = counts.get(w, 0) + 1
    words = [([w[0]] + ["##" + c for c in w[1:]], n) for w, n in sorted(counts.items())]
    alphabet = sorted({s for seq, _ in words for s in seq})
    tokens = SPECIALS + alphabet
    while len(tokens) < target:
        sym, pair = {}, {}
        for seq, n in words:
            for s in seq:
                sym[s] = sym.get(s, 0) + n
            for a, b in zip(seq, seq[1:]):
                pair[(a, b)] = pair.get((a, b), 0) + n
        candidates = [(p, c) for p, c in pair.items() if c >= 2]
        if not candidates:
            break
        best = max(Fraction(c, sym[a] * sym[b]) for (a, b), c in candidates)
        left, right = min(p for p, c in candidates if Fraction(c, sym[p[0]] * sym[p[1]]) == best)
        merged = left + right[2:] if right.startswith("##") else left + right
        if merged not in tokens:
            tokens.append(merged)
        new_words = []
        for seq, n in words:
            out, i = [], 0
            while i < len(seq):
                if i + 1 < len(seq) and seq[i] == left and seq[i + 1] == right:
                    out.append(merged)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            new_words.append((out, n))
        words = new_words
    return tokens


def wordpiece(word, vocab):
    pieces, start = [], 0
    while start < len(word):
        end = len(word)
        while end > start:
            piece = word[start:end] if start == 0 else "##" + word[start:end]
            if piece in vocab:
                break
            end -= 1
        if end == start:
            return ["[UNK]"]
        pieces.append(piece)
        start = end
    return pieces


def main():
    lines = corpus()
    tokens = train(lines, TARGET)
    vocab = set(tokens)
    tokenized = [[p for w in pre_tokenize(line) for p in wordpiece(w, vocab)] for line in lines]
    write_text("trainer_corpus.txt", "\n".join(lines) + "\n")
    write_json("trainer_expected.json", {"target": TARGET, "tokens": tokens, "tokenized": tokenized})


if __name__ == "__main__":
    main()
