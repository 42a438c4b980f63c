"""Tokenization, vocabulary, overlap annotation and count features."""
import hashlib
import math
import re
import unicodedata
from dataclasses import dataclass, field, replace
from importlib import resources

UNK = "<unk>"
_DIGIT_RE = re.compile(r"\d")
_DIGIT_RUN_RE = re.compile(r"\d+")


def _is_punct_char(ch):
    return unicodedata.category(ch)[0] in "PS"


def is_punctuation(token):
    return bool(token) and all(_is_punct_char(ch) for ch in token)


def tokenize_normalize(text, collapse_digits=False):
    """Whitespace-split, peel leading/trailing punctuation, lowercase, zero digits.

    Each peeled punctuation character becomes its own token.  Digits are
    replaced one-for-one by ``0``; ``collapse_digits=True`` maps each run of
    digits to a single ``0`` instead.

    >>> tokenize_normalize("How many Cats?")
    ['how', 'many', 'cats', '?']
    >>> tokenize_normalize("1234 km")
    ['0000', 'km']
    """
    digit_re, repl = (_DIGIT_RUN_RE, "0") if collapse_digits else (_DIGIT_RE, "0")
    tokens = []
    for chunk in text.split():
        start, end = 0, len(chunk)
        while start < end and _is_punct_char(chunk[start]):
            start += 1
        while end > start and _is_punct_char(chunk[end - 1]):
            end -= 1
        tokens.extend(chunk[:start])
        if end > start:
            tokens.append(digit_re.sub(repl, chunk[start:end].lower()))
        tokens.extend(chunk[end:])
    return tokens


def load_stopwords(path=None):
    """Read a stopword file (one token per line, ``#`` comments).

    With no path, the bundled English list is returned.
    """
    if path is None:
        text = resources.files("relqa").joinpath("resources/stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line)
    return frozenset(words)


def stopwords_hash(stopwords):
    return hashlib.sha256("\n".join(sorted(stopwords)).encode("utf-8")).hexdigest()


class Vocabulary:
    """Token <-> index map.  Index 0 is always the unknown token."""

    def __init__(self, tokens=()):
        self.itos = [UNK]
        self.stoi = {UNK: 0}
        for tok in tokens:
            self.add(tok)

    def add(self, token):
        idx = self.stoi.get(token)
        if idx is None:
            idx = self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return idx

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def index(self, token):
        return self.stoi.get(token, 0)

    def lookup(self, tokens):
        return [self.stoi.get(t, 0) for t in tokens]

    @property
    def unk_index(self):
        return 0

    def sha256(self):
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()

    @classmethod
    def from_tokens(cls, itos):
        itos = list(itos)
        if not itos or itos[0] != UNK:
            raise ValueError("vocabulary token list must start with the unknown token")
        vocab = cls(itos[1:])
        if len(vocab) != len(itos):
            raise ValueError("vocabulary token list contains duplicates")
        return vocab


def build_vocab(sentences):
    """First-seen ordering over an iterable of token lists."""
    vocab = Vocabulary()
    for tokens in sentences:
        for tok in tokens:
            vocab.add(tok)
    return vocab


@dataclass(frozen=True)
class AnnotatedSentence:
    """Normalized tokens, per-token overlap flags and vocabulary indices.

    ``indices`` is empty until the sentence is indexed against a vocabulary.
    """

    tokens: tuple
    overlap: tuple = None
    indices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        ov = (0,) * len(self.tokens) if self.overlap is None else tuple(int(o) for o in self.overlap)
        object.__setattr__(self, "overlap", ov)
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(ov) != len(self.tokens):
            raise ValueError("overlap flags and tokens differ in length")
        if any(o not in (0, 1) for o in ov):
            raise ValueError("overlap flags must be 0 or 1")
        if self.indices and len(self.indices) != len(self.tokens):
            raise ValueError("indices and tokens differ in length")

    def __len__(self):
        return len(self.tokens)

    @property
    def indexed(self):
        return len(self.indices) == len(self.tokens)

    def with_indices(self, vocab):
        return replace(self, indices=tuple(vocab.lookup(self.tokens)))

    def with_overlap(self, overlap):
        return replace(self, overlap=tuple(overlap))


def _matchable(token, stopwords):
    return token not in stopwords and not is_punctuation(token)


def annotate_overlap(q, a, stopwords=frozenset()):
    """Flag tokens whose string also occurs in the other sentence.

    Stopwords and pure-punctuation tokens are never flagged.
    """
    shared = {t for t in set(q.tokens) & set(a.tokens) if _matchable(t, stopwords)}
    q = q.with_overlap(int(t in shared) for t in q.tokens)
    a = a.with_overlap(int(t in shared) for t in a.tokens)
    return q, a


@dataclass
class IdfTable:
    weights: dict = field(default_factory=dict)
    default: float = 1.0

    def __getitem__(self, token):
        return self.weights.get(token, self.default)

    def __len__(self):
        return len(self.weights)


def build_idf(documents):
    """Smoothed idf ``ln((1+N)/(1+df)) + 1`` over an iterable of token lists.

    Unseen tokens get the largest observed weight.
    """
    df = {}
    n_docs = 0
    for tokens in documents:
        n_docs += 1
        for tok in set(tokens):
            df[tok] = df.get(tok, 0) + 1
    weights = {tok: math.log((1 + n_docs) / (1 + c)) + 1.0 for tok, c in df.items()}
    return IdfTable(weights, max(weights.values()) if weights else 1.0)


FEATURE_NAMES = ("overlap", "overlap_nostop", "idf_overlap", "idf_overlap_nostop")
N_FEATURES = len(FEATURE_NAMES)


def overlap_count_features(q, a, idf):
    """Four overlap counts over distinct token forms.

    ``[shared, shared non-stop, idf-weighted shared, idf-weighted shared non-stop]``;
    the non-stop set is taken from the overlap flags already set on ``q``.
    """
    shared = sorted(set(q.tokens) & set(a.tokens))
    flagged = sorted({t for t, o in zip(q.tokens, q.overlap) if o})
    return [
        float(len(shared)),
        float(len(flagged)),
        math.fsum(idf[t] for t in shared),
        math.fsum(idf[t] for t in flagged),
    ]
