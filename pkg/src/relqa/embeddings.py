"""Embedding tables and word2vec text/binary I/O."""
import mmap
import os
from dataclasses import dataclass

import numpy as np

from relqa.errors import DataFormatError

FORMATS = ("word2vec-text", "word2vec-binary")


class EmbeddingFormatError(DataFormatError):
    pass


class MalformedHeaderError(EmbeddingFormatError):
    pass


class DimensionMismatchError(EmbeddingFormatError):
    pass


class TruncatedPayloadError(EmbeddingFormatError):
    pass


@dataclass
class EmbeddingTable:
    """``|V| x d_w`` vectors, one row per vocabulary index.

    ``pretrained[i]`` is True when row ``i`` was copied from a vector file.
    """

    vocab: object
    vectors: np.ndarray
    pretrained: np.ndarray

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        self.pretrained = np.asarray(self.pretrained, dtype=bool)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ValueError(f"vectors shape {self.vectors.shape} does not match |V|={len(self.vocab)}")
        if self.pretrained.shape != (len(self.vocab),):
            raise ValueError("provenance flags must have one entry per vocabulary row")

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def coverage(self):
        return float(self.pretrained.mean()) if len(self.pretrained) else 0.0

    @classmethod
    def random(cls, vocab, dim, half_width=0.25, seed=0):
        table = cls(vocab, np.zeros((len(vocab), dim)), np.zeros(len(vocab), dtype=bool))
        return init_oov(table, half_width, seed)


def init_oov(table, half_width=0.25, seed=0):
    """Fill every non-pretrained row with i.i.d. U[-r, r] samples, in place."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    rng = np.random.default_rng(seed)
    rows = np.flatnonzero(~table.pretrained)
    table.vectors[rows] = rng.uniform(-half_width, half_width, size=(rows.size, table.dim))
    return table


def _parse_header(line, path):
    parts = line.split()
    try:
        if len(parts) != 2:
            raise ValueError
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise MalformedHeaderError(f"expected '<count> <dim>' header, got {line[:60]!r}", path, "line 1") from None
    if count < 0 or dim < 1:
        raise MalformedHeaderError(f"invalid header values count={count} dim={dim}", path, "line 1")
    return count, dim


def _iter_text(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        if not header:
            raise MalformedHeaderError("empty file", path, "line 1")
        count, dim = _parse_header(header, path)
        yield dim
        seen = 0
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            if seen == count:
                raise EmbeddingFormatError(f"more entries than the declared {count}", path, f"line {lineno}")
            if len(parts) != dim + 1:
                raise DimensionMismatchError(
                    f"expected {dim} values, found {len(parts) - 1}", path, f"line {lineno}")
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise EmbeddingFormatError("non-numeric vector component", path, f"line {lineno}") from None
            seen += 1
            yield parts[0], vec
        if seen < count:
            raise TruncatedPayloadError(f"declared {count} entries, found {seen}", path, f"line {lineno if seen else 1}")


def _iter_binary(path):
    with open(path, "rb") as f:
        if os.fstat(f.fileno()).st_size == 0:
            raise MalformedHeaderError("empty file", path, "byte 0")
        mm = mmap.mmap(f.fileno(), 0, access=mmap.ACCESS_READ)
    try:
        nl = mm.find(b"\n")
        if nl < 0:
            raise MalformedHeaderError("header line not terminated", path, "byte 0")
        try:
            header = mm[:nl].decode("ascii")
        except UnicodeDecodeError:
            raise MalformedHeaderError("header is not ASCII", path, "byte 0") from None
        count, dim = _parse_header(header, path)
        yield dim
        size, pos, width = len(mm), nl + 1, 4 * dim
        for _ in range(count):
            # tolerate the newline the reference word2vec tool writes after each vector
            while pos < size and mm[pos] in (0x0A, 0x0D):
                pos += 1
            sp = mm.find(b" ", pos)
            if pos >= size or sp < 0:
                raise TruncatedPayloadError("missing entry token", path, f"byte {pos}")
            try:
                token = mm[pos:sp].decode("utf-8")
            except UnicodeDecodeError:
                raise EmbeddingFormatError("token is not valid UTF-8", path, f"byte {pos}") from None
            start = sp + 1
            if start + width > size:
                raise TruncatedPayloadError(
                    f"vector for {token!r} needs {width} bytes, {size - start} remain", path, f"byte {start}")
            vec = np.frombuffer(mm, dtype="<f4", count=dim, offset=start).astype(np.float64)
            pos = start + width
            yield token, vec
    finally:
        # frombuffer views were copied by astype, so the map can close
        mm.close()


def iter_word2vec(path, fmt):
    """Yield the dimension, then ``(token, vector)`` pairs from a word2vec file."""
    if fmt == "word2vec-text":
        return _iter_text(path)
    if fmt == "word2vec-binary":
        return _iter_binary(path)
    raise ValueError(f"unknown embedding format {fmt!r}; expected one of {FORMATS}")


def load_word_embeddings(path, fmt, vocab, oov_range=0.25, seed=0, dim=None):
    """Build an embedding table for ``vocab`` from a word2vec file.

    Tokens missing from the file are initialized uniformly in
    ``[-oov_range, oov_range]``.  Returns ``(table, coverage)``.
    """
    it = iter_word2vec(path, fmt)
    file_dim = next(it)
    if dim is not None and dim != file_dim:
        raise DimensionMismatchError(f"file dimension {file_dim} != requested {dim}", path, "line 1")
    vectors = np.zeros((len(vocab), file_dim))
    pretrained = np.zeros(len(vocab), dtype=bool)
    for token, vec in it:
        idx = vocab.stoi.get(token)
        if idx is not None and not pretrained[idx]:
            vectors[idx] = vec
            pretrained[idx] = True
    table = init_oov(EmbeddingTable(vocab, vectors, pretrained), oov_range, seed)
    return table, table.coverage


def save_word2vec(table, path, fmt="word2vec-text"):
    """Write every row of ``table``.  Text output uses shortest round-trip floats."""
    n, dim = table.vectors.shape
    if fmt == "word2vec-text":
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{n} {dim}\n")
            for tok, row in zip(table.vocab.itos, table.vectors):
                f.write(tok + " " + " ".join(repr(float(v)) for v in row) + "\n")
    elif fmt == "word2vec-binary":
        with open(path, "wb") as f:
            f.write(f"{n} {dim}\n".encode("ascii"))
            for tok, row in zip(table.vocab.itos, table.vectors):
                f.write(tok.encode("utf-8") + b" " + row.astype("<f4").tobytes())
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")
