#!/usr/bin/env python3
"""Writes data/sample.conll and data/sample.brown from a small English-like grammar.

The output is deterministic for a given seed; rerun after editing the grammar.
"""
import argparse
import random
from collections import Counter
from pathlib import Path

DETS = ["the", "a", "this", "every"]
NOUNS = ["dog", "cat", "man", "woman", "child", "house", "car", "book", "city", "tree",
         "teacher", "garden", "river", "letter", "table", "window"]
ADJS = ["big", "small", "old", "red", "happy", "quiet", "green", "new"]
VERBS_T = ["saw", "found", "likes", "reads", "built", "wants", "opened", "painted"]
VERBS_I = ["sleeps", "runs", "arrived", "laughed", "waited"]
AUX = ["will", "can", "must"]
VERBS_BARE = ["see", "find", "like", "read", "build", "open"]
PREPS = ["in", "on", "near", "with", "behind"]
ADVS = ["very", "quite", "rather"]
ADVS_V = ["quickly", "today", "again", "slowly"]

CLASSES = [("000", DETS), ("001", NOUNS), ("010", ADJS), ("0110", VERBS_T), ("0111", VERBS_I),
           ("100", AUX), ("101", VERBS_BARE), ("110", PREPS), ("1110", ADVS), ("1111", ADVS_V)]


def zipf(rng, words):
    weights = [1.0 / (i + 1) ** 0.8 for i in range(len(words))]
    return rng.choices(words, weights)[0]


class Sentence:
    def __init__(self):
        self.tokens = []  # [form, head index (1-based, 0 = root), label, cpos]

    def add(self, form, head, label, pos):
        self.tokens.append([form, head, label, pos])
        return len(self.tokens)


def noun_phrase(rng, s, head, label, depth):
    det = s.add(zipf(rng, DETS), None, "NMOD", "DT")
    adjs = []
    for _ in range(rng.choices([0, 1, 2], [0.5, 0.35, 0.15])[0]):
        adv = s.add(zipf(rng, ADVS), None, "AMOD", "RB") if rng.random() < 0.2 else None
        adj = s.add(zipf(rng, ADJS), None, "NMOD", "JJ")
        if adv:
            s.tokens[adv - 1][1] = adj
        adjs.append(adj)
    noun = s.add(zipf(rng, NOUNS), head, label, "NN")
    for t in [det] + adjs:
        s.tokens[t - 1][1] = noun
    if depth < 2 and rng.random() < 0.3:
        prep_phrase(rng, s, noun, "NMOD", depth + 1)
    return noun


def prep_phrase(rng, s, head, label, depth):
    prep = s.add(zipf(rng, PREPS), head, label, "IN")
    noun_phrase(rng, s, prep, "PMOD", depth)


def sentence(rng):
    s = Sentence()
    subj = noun_phrase(rng, s, None, "SBJ", 0)
    if rng.random() < 0.25:
        root = s.add(zipf(rng, AUX), 0, "ROOT", "MD")
        verb = s.add(zipf(rng, VERBS_BARE), root, "VC", "VB")
        transitive = True
    else:
        transitive = rng.random() < 0.7
        root = verb = s.add(zipf(rng, VERBS_T if transitive else VERBS_I), 0, "ROOT", "VBD")
    s.tokens[subj - 1][1] = root
    if transitive:
        noun_phrase(rng, s, verb, "OBJ", 0)
    if rng.random() < 0.4:
        prep_phrase(rng, s, verb, "ADV", 0)
    if rng.random() < 0.25:
        s.add(zipf(rng, ADVS_V), verb, "ADV", "RB")
    s.add(".", root, "P", ".")
    return s


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sentences", type=int, default=500)
    ap.add_argument("--seed", type=int, default=20101)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    counts = Counter()
    lines = []
    made = 0
    while made < args.sentences:
        s = sentence(rng)
        if not 5 <= len(s.tokens) <= 20:
            continue
        made += 1
        lines.append(f"# sent_id = {made}")
        for i, (form, head, label, pos) in enumerate(s.tokens, 1):
            counts[form] += 1
            lines.append("\t".join([str(i), form, form, pos, pos, "_", str(head), label, "_", "_"]))
        lines.append("")
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sample.conll").write_text("\n".join(lines) + "\n")

    brown = []
    for prefix, words in CLASSES:
        for i, w in enumerate(words):
            bits = prefix + format(i % 4, "02b")
            brown.append(f"{bits}\t{w}\t{counts[w]}")
    (args.out / "sample.brown").write_text("\n".join(brown) + "\n")


if __name__ == "__main__":
    main()
