"""Shared preprocessing: vocabulary, embeddings, idf features, indexing."""
from dataclasses import dataclass

from relqa.embeddings import EmbeddingTable, load_word_embeddings
from relqa.text import build_vocab


@dataclass
class Prepared:
    vocab: object
    embeddings: EmbeddingTable
    idf: object
    stopwords: frozenset
    splits: dict


def prepare_splits(splits, stopwords, embeddings_path=None, embeddings_format="word2vec-text",
                   d_w=50, oov_range=0.25, seed=0, train_split="train"):
    """Index every split against one vocabulary and attach overlap features.

    The vocabulary covers all given splits (first-seen order, ``train`` first);
    idf weights come from ``train_split`` only.
    """
    from relqa.dataset import corpus_idf

    order = sorted(splits, key=lambda s: (s != train_split, list(splits).index(s)))
    vocab = build_vocab(tok for name in order for tok in splits[name].sentences())
    if embeddings_path is not None:
        embeddings, _ = load_word_embeddings(embeddings_path, embeddings_format, vocab, oov_range, seed)
    else:
        embeddings = EmbeddingTable.random(vocab, d_w, oov_range, seed)
    idf = corpus_idf(splits[train_split]) if train_split in splits else corpus_idf(splits[order[0]])
    out = {name: splits[name].annotate(stopwords).index(vocab).with_features(idf) for name in order}
    return Prepared(vocab, embeddings, idf, stopwords, out)


RESOURCES_MAGIC = b"RCNQR1"
RESOURCES_VERSION = 1


def save_resources(prepared, path):
    """Vocabulary, stopwords, idf and embedding table shared by every split."""
    from relqa import container
    from relqa.text import stopwords_hash

    header = {
        "kind": "relqa-resources",
        "vocab": list(prepared.vocab.itos),
        "vocab_sha256": prepared.vocab.sha256(),
        "stopwords": sorted(prepared.stopwords),
        "stopwords_sha256": stopwords_hash(prepared.stopwords),
        "idf": {"weights": prepared.idf.weights, "default": prepared.idf.default},
    }
    tensors = {"embeddings": prepared.embeddings.vectors,
               "pretrained": prepared.embeddings.pretrained}
    container.save(path, RESOURCES_MAGIC, RESOURCES_VERSION, header, tensors)


def load_resources(path):
    """Returns a :class:`Prepared` with an empty ``splits`` mapping."""
    from relqa import container
    from relqa.text import IdfTable, Vocabulary

    header, tensors = container.load(path, RESOURCES_MAGIC, RESOURCES_VERSION)
    try:
        vocab = Vocabulary.from_tokens(header["vocab"])
        if vocab.sha256() != header["vocab_sha256"]:
            raise container.CorruptHeaderError("vocabulary hash mismatch")
        table = EmbeddingTable(vocab, tensors["embeddings"], tensors["pretrained"])
        idf = IdfTable(header["idf"]["weights"], header["idf"]["default"])
        stopwords = frozenset(header["stopwords"])
    except (KeyError, TypeError, ValueError) as exc:
        raise container.CorruptHeaderError(f"resources header inconsistent: {exc!r}") from None
    return Prepared(vocab, table, idf, stopwords, {})
