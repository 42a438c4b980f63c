"""MAP / MRR / P@1 with question filtering, plus TREC run and qrels files.

Candidates are ranked by descending score, ties by ascending candidate id
(numeric ids compare numerically).  Candidates judged in the qrels but absent
from the run are ranked after every scored candidate; unjudged candidates
count as non-relevant.
"""
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

from relqa.errors import DataFormatError

POLICIES = ("all-positive-or-all-negative", "no-positive", "none")
DEFAULT_POLICY = "all-positive-or-all-negative"


def id_key(cid):
    cid = str(cid)
    return (0, int(cid), cid) if cid.isdigit() else (1, 0, cid)


class RankedRun:
    """Per-question candidate lists sorted by descending score."""

    def __init__(self, scores=None, name="relqa"):
        self.name = name
        self.rankings = {}
        for qid, cands in (scores or {}).items():
            self.add(qid, cands)

    def add(self, qid, cands):
        items = cands.items() if isinstance(cands, Mapping) else cands
        seen, ranked = set(), []
        for cid, score in items:
            cid, score = str(cid), float(score)
            if cid in seen:
                raise ValueError(f"duplicate candidate {cid!r} for question {qid!r}")
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {qid!r}/{cid!r}")
            seen.add(cid)
            ranked.append((cid, score))
        ranked.sort(key=lambda cs: (-cs[1], id_key(cs[0])))
        self.rankings[str(qid)] = ranked

    def __getitem__(self, qid):
        return self.rankings[qid]

    def __iter__(self):
        return iter(self.rankings)

    def __len__(self):
        return len(self.rankings)


def check_qrels(qrels):
    for qid, judged in qrels.items():
        for cid, rel in judged.items():
            if rel not in (0, 1):
                raise ValueError(f"relevance for {qid!r}/{cid!r} must be 0 or 1, got {rel!r}")


def _violates(labels, policy):
    pos = sum(labels)
    if policy == "all-positive-or-all-negative":
        return pos == 0 or pos == len(labels)
    if policy == "no-positive":
        return pos == 0
    if policy == "none":
        return False
    raise ValueError(f"unknown filter policy {policy!r}; expected one of {POLICIES}")


def filter_questions(data, policy=DEFAULT_POLICY):
    """Drop questions violating ``policy``.

    ``data`` is a qrels mapping ``{qid: {cid: rel}}`` or anything with a
    ``qrels()`` method and a ``subset(qids)`` method (a dataset).  Returns the
    filtered object of the same kind and the list of removed question ids.
    """
    qrels = data if isinstance(data, Mapping) else data.qrels()
    keep, removed = [], []
    for qid, judged in qrels.items():
        (removed if _violates(list(judged.values()), policy) else keep).append(qid)
    if isinstance(data, Mapping):
        return {qid: dict(qrels[qid]) for qid in keep}, removed
    return data.subset(keep), removed


def average_precision(rels):
    """Mean of precision@k over the ranks k holding a relevant item."""
    hits, total = 0, 0.0
    for k, rel in enumerate(rels, start=1):
        if rel:
            hits += 1
            total += hits / k
    if hits == 0:
        raise ValueError("average precision is undefined without relevant items")
    return total / hits


def reciprocal_rank(rels):
    for k, rel in enumerate(rels, start=1):
        if rel:
            return 1.0 / k
    return 0.0


def ranked_relevance(run, qrels, qid):
    judged = qrels[qid]
    ranked = [cid for cid, _ in run.rankings.get(qid, ())]
    present = set(ranked)
    ranked += sorted((c for c in map(str, judged) if c not in present), key=id_key)
    judged = {str(c): r for c, r in judged.items()}
    return [judged.get(cid, 0) for cid in ranked]


@dataclass
class Metrics:
    map: float
    mrr: float
    p_at_1: float
    n_questions: int
    removed: list = field(default_factory=list)
    per_question: dict = field(default_factory=dict, repr=False)

    def format(self):
        return (f"MAP {self.map:.4f}  MRR {self.mrr:.4f}  P@1 {self.p_at_1:.4f}  "
                f"questions {self.n_questions}")


def evaluate(run, qrels, policy=DEFAULT_POLICY):
    """Aggregate MAP, MRR and P@1 over the questions surviving ``policy``."""
    check_qrels(qrels)
    kept, removed = filter_questions(qrels, policy)
    if not kept:
        raise ValueError("no questions left to evaluate after filtering")
    per_q = {}
    for qid in kept:
        rels = ranked_relevance(run, kept, qid)
        per_q[qid] = (average_precision(rels), reciprocal_rank(rels), float(rels[0]))
    n = len(per_q)
    return Metrics(
        map=math.fsum(v[0] for v in per_q.values()) / n,
        mrr=math.fsum(v[1] for v in per_q.values()) / n,
        p_at_1=math.fsum(v[2] for v in per_q.values()) / n,
        n_questions=n,
        removed=removed,
        per_question=per_q,
    )


def write_trec_run(run, path):
    """``qid Q0 cid rank score name`` lines, ranks from 1."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for qid, ranked in run.rankings.items():
            for rank, (cid, score) in enumerate(ranked, start=1):
                f.write(f"{qid} Q0 {cid} {rank} {score!r} {run.name}\n")


def read_trec_run(path):
    scores, name = {}, None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise DataFormatError(f"expected 6 fields, found {len(parts)}", path, f"line {lineno}")
            qid, _, cid, rank, score, name = parts
            try:
                int(rank)
                scores.setdefault(qid, []).append((cid, float(score)))
            except ValueError:
                raise DataFormatError("rank must be an integer and score a number", path, f"line {lineno}") from None
    return RankedRun(scores, name or "relqa")


def read_qrels(path):
    qrels = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise DataFormatError(f"expected 4 fields, found {len(parts)}", path, f"line {lineno}")
            qid, _, cid, rel = parts
            if rel not in ("0", "1"):
                raise DataFormatError(f"relevance must be 0 or 1, got {rel!r}", path, f"line {lineno}")
            qrels.setdefault(qid, {})[cid] = int(rel)
    return qrels


def write_qrels(qrels, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for qid, judged in qrels.items():
            for cid, rel in judged.items():
                f.write(f"{qid} 0 {cid} {rel}\n")
