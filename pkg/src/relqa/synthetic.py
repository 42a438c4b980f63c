"""Synthetic reranking fixtures where lexical overlap decides the answer.

Every question carries two rare tokens of its own.  Its single correct
candidate repeats both, side by side; the distractors share at most one
common filler word with the question and may contain rare tokens borrowed
from *other* questions, so "looks rare" alone is not a usable cue.
"""
import string

import numpy as np

from relqa.dataset import dataset_from_rows

FILLER = (
    "river", "stone", "market", "winter", "engine", "garden", "letter", "mountain",
    "signal", "harbor", "forest", "copper", "valley", "window", "planet", "thunder",
    "silver", "bridge", "castle", "meadow", "rocket", "island", "lantern", "orchard",
    "canvas", "desert", "glacier", "pepper", "saddle", "tunnel", "violin", "walnut",
)
CONNECTORS = ("the", "of", "is", "a", "in", "what", "which", "was")


def rare_token(i, prefix="zq"):
    """Alphabetic id token (digits would be normalized away)."""
    letters = []
    while True:
        i, r = divmod(i, 26)
        letters.append(string.ascii_lowercase[r])
        if i == 0:
            break
    return prefix + "".join(reversed(letters))


def _sentence(rng, words, length):
    body = list(rng.choice(words, size=length))
    for _ in range(int(rng.integers(1, 3))):
        body.insert(int(rng.integers(0, len(body) + 1)), str(rng.choice(CONNECTORS)))
    return body


def overlap_rows(n_questions=20, n_candidates=5, seed=0, prefix="zq", qid_prefix="q"):
    """Rows ``(qid, label, question, answer)``; candidate 0..k-1 order is shuffled."""
    if n_candidates < 2:
        raise ValueError("need at least one distractor per question")
    rng = np.random.default_rng(seed)
    rare = [(rare_token(2 * i, prefix), rare_token(2 * i + 1, prefix)) for i in range(n_questions)]
    rows = []
    for qi in range(n_questions):
        qid = f"{qid_prefix}{qi}"
        q_fill = list(rng.choice(FILLER, size=4, replace=False))
        others = [w for w in FILLER if w not in q_fill]
        q = _sentence(rng, q_fill, 3)
        for tok in rare[qi]:
            q.insert(int(rng.integers(0, len(q) + 1)), tok)

        pos = _sentence(rng, others, 4)
        at = int(rng.integers(0, len(pos) + 1))
        pos[at:at] = list(rare[qi])
        cands = [(1, pos)]
        for _ in range(n_candidates - 1):
            neg = _sentence(rng, others, 5)
            if rng.random() < 0.5:
                neg.insert(int(rng.integers(0, len(neg) + 1)), str(rng.choice(q_fill)))
            if n_questions > 1 and rng.random() < 0.7:
                other = int(rng.integers(0, n_questions - 1))
                other += other >= qi
                borrowed = list(rare[other])
                at = int(rng.integers(0, len(neg) + 1))
                neg[at:at] = borrowed
            cands.append((0, neg))
        for k in rng.permutation(len(cands)):
            label, toks = cands[k]
            rows.append((qid, label, " ".join(q), " ".join(toks)))
    return rows


def overlap_dataset(n_questions=20, n_candidates=5, seed=0, split="train", prefix="zq",
                    qid_prefix="q", stopwords=None):
    rows = overlap_rows(n_questions, n_candidates, seed, prefix, qid_prefix)
    return dataset_from_rows(rows, split, stopwords, meta={"format": "synthetic-overlap", "seed": seed})
