#!/usr/bin/env python3
"""Generate the bundled synthetic corpus.

Writes a multi-annotator CSV in the shared-task layout, a matching 300-d
word-vector file with a count/dimension header, and a run config. Label 1 is
positive exactly when the marker token "zorblax" occurs; label 3 likewise for
"quenth". Annotator votes are noisy but always aggregate to those labels.
"""

import argparse
import csv
import json
import os
import random

MARKER_1 = "zorblax"
MARKER_3 = "quenth"
SYLLABLES = ["ka", "lo", "mi", "ru", "te", "vo", "sa", "ne", "pi", "da", "gu", "fe", "ri", "no", "bu"]
NOISE = ["https://example.com/x", "@someone", "#topic", "\U0001F600", "!!", "...", "&amp;", "<b>", "</b>"]


def make_words(rng, count):
    words = set()
    while len(words) < count:
        words.add("".join(rng.choice(SYLLABLES) for _ in range(rng.randint(2, 3))))
    return sorted(words)


def votes_for(rng, label):
    """Six en_a* cells whose Agree/Disagree majority yields `label`."""
    while True:
        cells = []
        for _ in range(6):
            r = rng.random()
            if r < 0.1:
                cells.append("NL")
            elif r < 0.2:
                cells.append("NaN")
            elif r < 0.85:
                cells.append("1" if label else "0")
            else:
                cells.append("0" if label else "1")
        agree, disagree = cells.count("1"), cells.count("0")
        if agree + disagree == 0:
            continue
        if (agree >= disagree) == bool(label):
            return cells


def make_text(rng, words, marker_1, marker_3):
    tokens = [rng.choice(words) for _ in range(rng.randint(5, 18))]
    if marker_1:
        tokens.insert(rng.randrange(len(tokens) + 1), MARKER_1)
    if marker_3:
        tokens.insert(rng.randrange(len(tokens) + 1), MARKER_3)
    if rng.random() < 0.3:
        tokens.insert(rng.randrange(len(tokens) + 1), rng.choice(NOISE))
    if rng.random() < 0.3:
        tokens[0] = tokens[0].capitalize()
    return " ".join(tokens)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "synthetic"))
    parser.add_argument("--examples", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    os.makedirs(args.out, exist_ok=True)

    words = make_words(rng, 120)
    header = ["id", "text", "language", "key"]
    header += [f"en_a{i}" for i in range(1, 7)]
    header += [f"hi_a{i}" for i in range(1, 6)]
    header += [f"ta_a{i}" for i in range(1, 7)]
    with open(os.path.join(args.out, "corpus.csv"), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for n in range(args.examples):
            y1 = n % 2
            y3 = 1 if (y1 and rng.random() < 0.5) else 0
            text = make_text(rng, words, y1, y3)
            ident = f"syn{n:04d}"
            for key, label in ((1, y1), (2, y1 if rng.random() < 0.8 else 1 - y1), (3, y3)):
                w.writerow([ident, text, "en", f"question_{key}"] + votes_for(rng, label) + ["NaN"] * 11)
        # Rows nobody voted on are dropped during aggregation.
        for n in range(4):
            text = make_text(rng, words, 0, 0)
            for key in (1, 2, 3):
                w.writerow([f"unl{n:02d}", text, "en", f"question_{key}"] + ["NL"] * 6 + ["NaN"] * 11)

    vocab = words + [MARKER_1, MARKER_3, "someone", "topic"]
    with open(os.path.join(args.out, "vectors.txt"), "w", encoding="utf-8") as f:
        f.write(f"{len(vocab)} 300\n")
        for word in vocab:
            f.write(word + " " + " ".join(f"{rng.gauss(0.0, 0.5):.5f}" for _ in range(300)) + "\n")


if __name__ == "__main__":
    main()
