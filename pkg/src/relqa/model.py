"""Question-answer matching network.

Two convolutional sentence encoders produce ``x_q`` and ``x_a``; a bilinear
form gives ``x_sim = x_q^T M x_a``; the join vector ``[x_q; x_sim; x_a; x_feat]``
feeds a ReLU hidden layer of the same width and a 2-way softmax.
"""
import copy
from dataclasses import asdict, dataclass

import numpy as np

from relqa.encoder import build_sentence_matrix, encode_backward, encode_sentence
from relqa.errors import DimensionError, RelqaError
from relqa.numeric import FilterBank, relu, relu_grad, softmax_nll
from relqa.text import N_FEATURES

RELATIONAL_MODES = ("none", "fvec", "emb", "both")
BLOCK_NAMES = ("W", "Wo", "Fq", "bq", "Fa", "ba", "M", "Wh", "bh", "Ws", "bs")


class StaleCacheError(RelqaError):
    """A forward cache was used after the parameters changed."""


@dataclass(frozen=True)
class Hyperparams:
    vocab_size: int
    d_w: int = 50
    d_o: int = 5
    n: int = 100
    m: int = 5
    conv: str = "wide"
    mode: str = "emb"
    n_feat: int = None

    def __post_init__(self):
        if self.n_feat is None:
            object.__setattr__(self, "n_feat", N_FEATURES if self.mode in ("fvec", "both") else 0)
        if self.mode not in RELATIONAL_MODES:
            raise ValueError(f"relational mode must be one of {RELATIONAL_MODES}, got {self.mode!r}")
        if self.conv not in ("wide", "narrow"):
            raise ValueError(f"conv mode must be 'wide' or 'narrow', got {self.conv!r}")
        for name in ("vocab_size", "d_w", "d_o", "n", "m"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.uses_features != (self.n_feat > 0):
            raise ValueError(f"mode {self.mode!r} is incompatible with n_feat={self.n_feat}")

    @property
    def uses_flags(self):
        return self.mode in ("emb", "both")

    @property
    def uses_features(self):
        return self.mode in ("fvec", "both")

    @property
    def depth(self):
        return self.d_w + self.d_o

    @property
    def join_size(self):
        return 2 * self.n + 1 + self.n_feat

    def to_dict(self):
        return asdict(self)


def _uniform(rng, shape, fan_in, fan_out):
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


class ModelParams:
    """The full parameter set plus hyperparameters.

    ``version`` is bumped by every in-place update so stale forward caches can
    be detected.
    """

    def __init__(self, hp, blocks, freeze_W=True):
        self.hp = hp
        self.freeze_W = freeze_W
        self.version = 0
        for name in BLOCK_NAMES:
            setattr(self, name, np.ascontiguousarray(blocks[name], dtype=np.float64))
        self._check_shapes()

    def _check_shapes(self):
        hp, J = self.hp, self.hp.join_size
        expected = {
            "W": (hp.vocab_size, hp.d_w), "Wo": (2, hp.d_o),
            "Fq": (hp.n, hp.depth, hp.m), "bq": (hp.n,),
            "Fa": (hp.n, hp.depth, hp.m), "ba": (hp.n,),
            "M": (hp.n, hp.n), "Wh": (J, J), "bh": (J,), "Ws": (2, J), "bs": (2,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(f"block {name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def fq(self):
        return FilterBank(self.Fq, self.bq)

    @property
    def fa(self):
        return FilterBank(self.Fa, self.ba)

    def blocks(self):
        return {name: getattr(self, name) for name in BLOCK_NAMES}

    def trainable_names(self):
        names = list(BLOCK_NAMES)
        if self.freeze_W:
            names.remove("W")
        if not self.hp.uses_flags:
            names.remove("Wo")
        return names

    def bump(self):
        self.version += 1

    def copy(self):
        out = copy.copy(self)
        for name in BLOCK_NAMES:
            setattr(out, name, getattr(self, name).copy())
        return out

    def equals(self, other):
        return self.hp == other.hp and all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in BLOCK_NAMES)


def init_params(hp, seed=0, embeddings=None, freeze_W=True, overlap_range=0.25):
    """Seeded initialization; fan-scaled uniform weights, zero biases.

    ``embeddings`` (an :class:`~relqa.embeddings.EmbeddingTable` or array)
    supplies ``W``; otherwise ``W`` is drawn from U[-0.25, 0.25].
    """
    rng = np.random.default_rng(seed)
    n, d, m, J = hp.n, hp.depth, hp.m, hp.join_size
    blocks = {
        "Wo": rng.uniform(-overlap_range, overlap_range, size=(2, hp.d_o)),
        "Fq": _uniform(rng, (n, d, m), d * m, n * m),
        "bq": np.zeros(n),
        "Fa": _uniform(rng, (n, d, m), d * m, n * m),
        "ba": np.zeros(n),
        "M": _uniform(rng, (n, n), n, n),
        "Wh": _uniform(rng, (J, J), J, J),
        "bh": np.zeros(J),
        "Ws": _uniform(rng, (2, J), J, 2),
        "bs": np.zeros(2),
    }
    if embeddings is None:
        blocks["W"] = rng.uniform(-0.25, 0.25, size=(hp.vocab_size, hp.d_w))
    else:
        vectors = getattr(embeddings, "vectors", embeddings)
        blocks["W"] = np.array(vectors, dtype=np.float64)
    return ModelParams(hp, blocks, freeze_W=freeze_W)


@dataclass
class ForwardCache:
    enc_q: object
    enc_a: object
    x_sim: float
    x_feat: np.ndarray
    x_join: np.ndarray
    h_pre: np.ndarray
    h: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    version: int


def _sentence(sent, params, use_flags):
    if not sent.indexed:
        raise ValueError("sentence has not been indexed against a vocabulary")
    flags = sent.overlap if use_flags else np.zeros(len(sent), dtype=np.intp)
    min_len = params.hp.m if params.hp.conv == "narrow" else 1
    return build_sentence_matrix(sent.indices, flags, params.W, params.Wo, min_len)


def forward(q, a, params, x_feat=None):
    hp = params.hp
    if hp.uses_features:
        if x_feat is None:
            raise DimensionError(f"mode {hp.mode!r} requires an x_feat vector of length {hp.n_feat}")
        x_feat = np.asarray(x_feat, dtype=np.float64)
        if x_feat.shape != (hp.n_feat,):
            raise DimensionError(f"x_feat length {x_feat.shape} != ({hp.n_feat},)")
    else:
        if x_feat is not None and len(x_feat):
            raise DimensionError(f"mode {hp.mode!r} takes no x_feat")
        x_feat = np.zeros(0)

    Sq, iq, fq = _sentence(q, params, hp.uses_flags)
    Sa, ia, fa = _sentence(a, params, hp.uses_flags)
    enc_q = encode_sentence(Sq, params.fq, hp.conv, iq, fq)
    enc_a = encode_sentence(Sa, params.fa, hp.conv, ia, fa)

    x_sim = float(enc_q.x @ params.M @ enc_a.x)
    x_join = np.concatenate([enc_q.x, [x_sim], enc_a.x, x_feat])
    h_pre = params.Wh @ x_join + params.bh
    h = relu(h_pre)
    logits = params.Ws @ h + params.bs
    e = np.exp(logits - logits.max())
    probs = e / e.sum()
    return ForwardCache(enc_q, enc_a, x_sim, x_feat, x_join, h_pre, h, logits, probs, params.version)


def backward(cache, label, params, into=None, scale=1.0, input_grads=False):
    """Gradients of ``-log p(label)`` w.r.t. every trainable block.

    With ``into`` the (scaled) gradients are added to that dict of arrays and
    it is returned; otherwise a fresh dict is built.  ``input_grads=True``
    adds an ``"x_feat"`` entry holding the gradient w.r.t. the feature input.
    Returns ``(loss, grads)``.
    """
    if cache.version != params.version:
        raise StaleCacheError(f"cache built at parameter version {cache.version}, now {params.version}")
    hp, n = params.hp, params.hp.n
    names = params.trainable_names()
    grads = into if into is not None else {name: np.zeros_like(getattr(params, name)) for name in names}

    _, loss, dlogits = softmax_nll(cache.logits, label)
    dlogits *= scale
    grads["Ws"] += np.outer(dlogits, cache.h)
    grads["bs"] += dlogits
    dh_pre = relu_grad(cache.h_pre, params.Ws.T @ dlogits)
    grads["Wh"] += np.outer(dh_pre, cache.x_join)
    grads["bh"] += dh_pre
    dx_join = params.Wh.T @ dh_pre

    xq, xa = cache.enc_q.x, cache.enc_a.x
    dsim = dx_join[n]
    dxq = dx_join[:n] + dsim * (params.M @ xa)
    dxa = dx_join[n + 1:2 * n + 1] + dsim * (params.M.T @ xq)
    grads["M"] += dsim * np.outer(xq, xa)

    dW = grads["W"] if "W" in names else None
    dWo = grads["Wo"] if "Wo" in names else None
    _, dFq, dbq = encode_backward(cache.enc_q, params.fq, hp.conv, dxq, dW, dWo)
    _, dFa, dba = encode_backward(cache.enc_a, params.fa, hp.conv, dxa, dW, dWo)
    grads["Fq"] += dFq
    grads["bq"] += dbq
    grads["Fa"] += dFa
    grads["ba"] += dba
    if input_grads:
        grads["x_feat"] = dx_join[2 * n + 1:].copy()
    return loss, grads


def score(q, a, params, x_feat=None):
    """Probability of the positive class; the ranking key."""
    return float(forward(q, a, params, x_feat).probs[1])


def log_odds(q, a, params, x_feat=None):
    """Positive-class logit margin ``z1 - z0``; a strictly monotone transform of :func:`score`."""
    z = forward(q, a, params, x_feat).logits
    return float(z[1] - z[0])
