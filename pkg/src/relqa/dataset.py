"""QA datasets: parsing, grouping, annotation and the preprocessed container."""
import csv
import os
import re
from dataclasses import dataclass, replace

import numpy as np

from relqa import container
from relqa.errors import DataFormatError
from relqa.text import (
    AnnotatedSentence,
    annotate_overlap,
    build_idf,
    load_stopwords,
    overlap_count_features,
    tokenize_normalize,
)

DATASET_MAGIC = b"RCNQD1"
DATASET_VERSION = 1
WIKIQA_COLUMNS = ("QuestionID", "Question", "DocumentID", "DocumentTitle", "SentenceID", "Sentence", "Label")


@dataclass(frozen=True)
class QAPair:
    qid: str
    cid: str
    question: AnnotatedSentence
    answer: AnnotatedSentence
    label: int
    x_feat: tuple = None


class Dataset:
    """Questions in source order, each with its candidates in source order."""

    def __init__(self, questions=None, split="train", meta=None):
        self.questions = dict(questions or {})
        self.split = split
        self.meta = dict(meta or {})
        for qid, pairs in self.questions.items():
            cids = [p.cid for p in pairs]
            if len(set(cids)) != len(cids):
                raise ValueError(f"duplicate candidate ids in question {qid!r}")

    def __len__(self):
        return len(self.questions)

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.split == other.split
                and self.meta == other.meta and self.questions == other.questions)

    @property
    def n_pairs(self):
        return sum(len(p) for p in self.questions.values())

    def pairs(self):
        for pairs in self.questions.values():
            yield from pairs

    def qrels(self):
        return {qid: {p.cid: p.label for p in pairs} for qid, pairs in self.questions.items()}

    def subset(self, qids):
        return Dataset({q: self.questions[q] for q in qids}, self.split, self.meta)

    def map_pairs(self, fn):
        return Dataset({q: [fn(p) for p in pairs] for q, pairs in self.questions.items()},
                       self.split, self.meta)

    def sentences(self):
        """Each question once, then every answer: the documents of the corpus."""
        for pairs in self.questions.values():
            yield pairs[0].question.tokens
            for p in pairs:
                yield p.answer.tokens

    def annotate(self, stopwords):
        def fn(p):
            q, a = annotate_overlap(p.question, p.answer, stopwords)
            return replace(p, question=q, answer=a)
        return self.map_pairs(fn)

    def index(self, vocab):
        return self.map_pairs(lambda p: replace(
            p, question=p.question.with_indices(vocab), answer=p.answer.with_indices(vocab)))

    def with_features(self, idf):
        return self.map_pairs(lambda p: replace(
            p, x_feat=tuple(overlap_count_features(p.question, p.answer, idf))))


def _sentence(text, path, lineno, collapse_digits):
    tokens = tokenize_normalize(text, collapse_digits)
    if not tokens:
        raise DataFormatError("empty sentence", path, f"line {lineno}")
    return AnnotatedSentence(tokens)


def _group(rows, split, meta, stopwords):
    questions = {}
    for qid, cid, q, a, label in rows:
        q, a = annotate_overlap(q, a, stopwords)
        questions.setdefault(qid, []).append(QAPair(qid, cid, q, a, label))
    return Dataset(questions, split, meta)


def _label(value, path, lineno):
    if value not in ("0", "1"):
        raise DataFormatError(f"label must be 0 or 1, got {value!r}", path, f"line {lineno}")
    return int(value)


def parse_canonical_tsv(path, split="train", stopwords=None, collapse_digits=False):
    """Parse ``question_id<TAB>label<TAB>question<TAB>answer`` rows.

    Candidate ids are ``0..k-1`` per question in file order; overlap flags are
    computed here (bundled stopword list unless ``stopwords`` is given).
    """
    stopwords = load_stopwords() if stopwords is None else stopwords
    rows, counters = [], {}
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise DataFormatError(f"expected 4 tab-separated columns, found {len(cols)}", path, f"line {lineno}")
            qid, label, qtext, atext = cols
            qid = qid.strip()
            if not qid:
                raise DataFormatError("empty question id", path, f"line {lineno}")
            label = _label(label.strip(), path, lineno)
            cid = counters.get(qid, 0)
            counters[qid] = cid + 1
            rows.append((qid, str(cid), _sentence(qtext, path, lineno, collapse_digits),
                         _sentence(atext, path, lineno, collapse_digits), label))
    meta = {"source": os.path.basename(path), "format": "canonical-tsv"}
    return _group(rows, split, meta, stopwords)


def parse_wikiqa_tsv(path, split="train", stopwords=None, collapse_digits=False):
    """Parse the official WikiQA TSV (header line required).

    The WikiQA sentence id becomes the candidate id.  Questions without a
    correct answer are kept; filtering is left to the evaluation policy.
    """
    stopwords = load_stopwords() if stopwords is None else stopwords
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header[:7]) != WIKIQA_COLUMNS:
            raise DataFormatError("missing WikiQA header " + "\t".join(WIKIQA_COLUMNS), path, "line 1")
        for lineno, cols in enumerate(reader, start=2):
            if not cols or not any(c.strip() for c in cols):
                continue
            if len(cols) < 7:
                raise DataFormatError(f"expected 7 columns, found {len(cols)}", path, f"line {lineno}")
            qid, qtext, _, _, sid, stext, label = cols[:7]
            rows.append((qid, sid, _sentence(qtext, path, lineno, collapse_digits),
                         _sentence(stext, path, lineno, collapse_digits), _label(label.strip(), path, lineno)))
    meta = {"source": os.path.basename(path), "format": "wikiqa-tsv"}
    return _group(rows, split, meta, stopwords)


_TREC_OPEN = re.compile(r"<(QApairs|question|positive|negative)\b[^>]*>")
_TREC_ID = re.compile(r"id=['\"]([^'\"]+)['\"]")


def convert_trec_xml(path, out_path):
    """Convert the Wang et al. (2007) QA-pairs markup to canonical TSV.

    Only the first line after each ``<question>``/``<positive>``/``<negative>``
    tag (the tab-separated tokens) is used; annotation lines are ignored.
    Returns the number of rows written.
    """
    qid, question, pending, n = None, None, None, 0
    with open(path, encoding="utf-8", errors="replace") as f, \
            open(out_path, "w", encoding="utf-8", newline="\n") as out:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if pending is not None:
                text = " ".join(stripped.split("\t")).strip()
                if pending == "question":
                    question = text
                else:
                    if qid is None or question is None:
                        raise DataFormatError("answer before question", path, f"line {lineno}")
                    label = "1" if pending == "positive" else "0"
                    out.write(f"{qid}\t{label}\t{question}\t{text}\n")
                    n += 1
                pending = None
                continue
            m = _TREC_OPEN.match(stripped)
            if not m:
                continue
            tag = m.group(1)
            if tag == "QApairs":
                ident = _TREC_ID.search(stripped)
                qid = ident.group(1) if ident else str(lineno)
                question = None
            else:
                pending = tag
    return n


def dataset_from_rows(rows, split="train", stopwords=None, collapse_digits=False, meta=None):
    """Build a dataset from in-memory ``(qid, label, question, answer)`` rows."""
    stopwords = load_stopwords() if stopwords is None else stopwords
    out, counters = [], {}
    for i, (qid, label, qtext, atext) in enumerate(rows, start=1):
        cid = counters.get(qid, 0)
        counters[qid] = cid + 1
        out.append((str(qid), str(cid), _sentence(qtext, "<rows>", i, collapse_digits),
                    _sentence(atext, "<rows>", i, collapse_digits), _label(str(label), "<rows>", i)))
    return _group(out, split, meta or {"format": "rows"}, stopwords)


def write_canonical_tsv(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for qid, label, qtext, atext in rows:
            f.write(f"{qid}\t{label}\t{qtext}\t{atext}\n")


def dataset_stats(ds):
    pairs = ds.n_pairs
    pos = sum(p.label for p in ds.pairs())
    return {
        "questions": len(ds),
        "pairs": pairs,
        "percent_positive": 100.0 * pos / pairs if pairs else None,
    }


def corpus_idf(ds):
    return build_idf(ds.sentences())


def save_preprocessed(ds, path, vocab_sha256=None):
    questions, overlap, indices, feats = [], [], [], []
    indexed = all(p.question.indexed and p.answer.indexed for p in ds.pairs())
    with_feat = ds.n_pairs > 0 and all(p.x_feat is not None for p in ds.pairs())
    for qid, pairs in ds.questions.items():
        entries = []
        for p in pairs:
            entries.append({"cid": p.cid, "label": p.label,
                            "q": list(p.question.tokens), "a": list(p.answer.tokens)})
            for s in (p.question, p.answer):
                overlap.extend(s.overlap)
                if indexed:
                    indices.extend(s.indices)
            if with_feat:
                feats.append(p.x_feat)
        questions.append({"qid": qid, "pairs": entries})
    header = {
        "kind": "relqa-dataset", "split": ds.split, "meta": ds.meta,
        "indexed": indexed, "vocab_sha256": vocab_sha256, "questions": questions,
    }
    tensors = {
        "overlap": np.array(overlap, dtype=np.uint8),
        "indices": np.array(indices, dtype="<i8"),
    }
    if with_feat:
        tensors["x_feat"] = np.array(feats, dtype=np.float64)
    container.save(path, DATASET_MAGIC, DATASET_VERSION, header, tensors)


def load_preprocessed(path):
    """Returns ``(dataset, vocab_sha256)``."""
    header, tensors = container.load(path, DATASET_MAGIC, DATASET_VERSION)
    overlap = tensors["overlap"].tolist()
    indices = tensors["indices"].tolist()
    feats = tensors.get("x_feat")
    pos_o = pos_i = n = 0
    questions = {}
    try:
        for q in header["questions"]:
            pairs = []
            for e in q["pairs"]:
                sents = []
                for toks in (e["q"], e["a"]):
                    L = len(toks)
                    idx = indices[pos_i:pos_i + L] if header["indexed"] else ()
                    sents.append(AnnotatedSentence(toks, overlap[pos_o:pos_o + L], idx))
                    pos_o += L
                    pos_i += L if header["indexed"] else 0
                x_feat = tuple(feats[n].tolist()) if feats is not None else None
                pairs.append(QAPair(q["qid"], e["cid"], sents[0], sents[1], int(e["label"]), x_feat))
                n += 1
            questions[q["qid"]] = pairs
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise container.CorruptHeaderError(f"dataset header inconsistent with tensors: {exc}") from None
    if pos_o != len(overlap) or pos_i != len(indices):
        raise container.CorruptHeaderError("dataset tensors longer than the header describes")
    return Dataset(questions, header["split"], header["meta"]), header.get("vocab_sha256")
