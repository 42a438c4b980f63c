"""Model checkpoints in the ``RCNQA1`` container format."""
from dataclasses import dataclass

from relqa import container
from relqa.container import (  # noqa: F401  re-exported for callers
    BadMagicError,
    ContainerError,
    CorruptHeaderError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from relqa.model import BLOCK_NAMES, Hyperparams, ModelParams
from relqa.text import IdfTable, Vocabulary, stopwords_hash
from relqa.trainer import AdadeltaState, TrainHistory

MAGIC = b"RCNQA1"
VERSION = 1


@dataclass
class Checkpoint:
    params: ModelParams
    vocab: Vocabulary
    stopwords: frozenset = None
    idf: IdfTable = None
    optimizer: AdadeltaState = None
    history: TrainHistory = None
    config: dict = None


def _header_and_tensors(ckpt):
    params = ckpt.params
    header = {
        "kind": "relqa-checkpoint",
        "hyperparams": params.hp.to_dict(),
        "freeze_W": params.freeze_W,
        "vocab": list(ckpt.vocab.itos),
        "vocab_sha256": ckpt.vocab.sha256(),
        "stopwords": sorted(ckpt.stopwords) if ckpt.stopwords is not None else None,
        "stopwords_sha256": stopwords_hash(ckpt.stopwords) if ckpt.stopwords is not None else None,
        "idf": {"weights": ckpt.idf.weights, "default": ckpt.idf.default} if ckpt.idf is not None else None,
        "adadelta": None,
        "history": ckpt.history.to_dict() if ckpt.history is not None else None,
        "config": ckpt.config,
    }
    tensors = {f"param/{name}": getattr(params, name) for name in BLOCK_NAMES}
    if ckpt.optimizer is not None:
        opt = ckpt.optimizer
        header["adadelta"] = {"rho": opt.rho, "eps": opt.eps, "blocks": list(opt.eg2)}
        for name in opt.eg2:
            tensors[f"adadelta/eg2/{name}"] = opt.eg2[name]
            tensors[f"adadelta/edx2/{name}"] = opt.edx2[name]
    return header, tensors


def dumps(ckpt):
    header, tensors = _header_and_tensors(ckpt)
    return container.dumps(MAGIC, VERSION, header, tensors)


def save_checkpoint(path, ckpt):
    with open(path, "wb") as f:
        f.write(dumps(ckpt))


def loads(data):
    header, tensors = container.loads(data, MAGIC, VERSION)
    try:
        hp = Hyperparams(**header["hyperparams"])
        blocks = {name: tensors[f"param/{name}"] for name in BLOCK_NAMES}
        params = ModelParams(hp, blocks, freeze_W=header["freeze_W"])
        vocab = Vocabulary.from_tokens(header["vocab"])
        if vocab.sha256() != header["vocab_sha256"]:
            raise CorruptHeaderError("vocabulary hash mismatch")
        sw = header["stopwords"]
        stopwords = frozenset(sw) if sw is not None else None
        if stopwords is not None and stopwords_hash(stopwords) != header["stopwords_sha256"]:
            raise CorruptHeaderError("stopword hash mismatch")
        idf = IdfTable(header["idf"]["weights"], header["idf"]["default"]) if header["idf"] else None
        optimizer = None
        if header["adadelta"] is not None:
            a = header["adadelta"]
            optimizer = AdadeltaState({}, a["rho"], a["eps"])
            optimizer.eg2 = {n: tensors[f"adadelta/eg2/{n}"] for n in a["blocks"]}
            optimizer.edx2 = {n: tensors[f"adadelta/edx2/{n}"] for n in a["blocks"]}
        history = TrainHistory.from_dict(header["history"]) if header["history"] else None
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptHeaderError(f"checkpoint header inconsistent: {exc!r}") from None
    return Checkpoint(params, vocab, stopwords, idf, optimizer, history, header["config"])


def load_checkpoint(path):
    with open(path, "rb") as f:
        return loads(f.read())
