"""Sentence model: lookup + overlap augmentation, conv, ReLU, max-pool."""
from dataclasses import dataclass

import numpy as np

from relqa.errors import DimensionError
from relqa.numeric import kernels

PAD_INDEX = -1


@dataclass
class SentenceEncoding:
    S: np.ndarray
    C: np.ndarray
    x: np.ndarray
    argmax: np.ndarray
    indices: np.ndarray  # vocabulary index per column, PAD_INDEX for padding
    flags: np.ndarray


def build_sentence_matrix(indices, flags, W, Wo, min_len=1):
    """Stack ``[W[idx]; Wo[flag]]`` column-wise into a ``(d_w + d_o, L)`` matrix.

    Sentences shorter than ``min_len`` are left-padded with columns whose word
    part is zero and whose overlap part is ``Wo[0]``.  Returns
    ``(S, indices, flags)`` with the padded index/flag arrays.
    """
    indices = np.asarray(indices, dtype=np.intp)
    flags = np.asarray(flags, dtype=np.intp)
    if indices.size == 0:
        raise DimensionError("cannot build a sentence matrix for an empty sentence")
    if indices.shape != flags.shape:
        raise DimensionError("indices and flags differ in length")
    if indices.min() < 0 or indices.max() >= W.shape[0]:
        raise DimensionError(f"token index out of range for vocabulary of size {W.shape[0]}")
    n_pad = max(0, min_len - indices.size)
    if n_pad:
        indices = np.concatenate([np.full(n_pad, PAD_INDEX, dtype=np.intp), indices])
        flags = np.concatenate([np.zeros(n_pad, dtype=np.intp), flags])
    d_w = W.shape[1]
    S = np.empty((d_w + Wo.shape[1], indices.size))
    S[:d_w, :n_pad] = 0.0
    S[:d_w, n_pad:] = W[indices[n_pad:]].T
    S[d_w:] = Wo[flags].T
    return S, indices, flags


def encode_sentence(S, fb, mode="wide", indices=None, flags=None):
    x, argmax, C = kernels.encode_forward(S, fb, mode)
    return SentenceEncoding(S, C, x, argmax, indices, flags)


def encode_backward(enc, fb, mode, dx, dW=None, dWo=None):
    """Backpropagate ``dx`` through the encoder.

    Returns ``(dS, dFilters, dBias)``.  When given, ``dW`` and ``dWo`` are
    accumulated in place: each column of ``dS`` is split at the word/overlap
    boundary and added to the row of its token and of its flag.
    """
    dS, dF, db = kernels.encode_backward(enc.S, fb, mode, enc.C, enc.argmax, dx)
    if dW is not None:
        d_w = dW.shape[1]
        real = enc.indices != PAD_INDEX
        np.add.at(dW, enc.indices[real], dS[:d_w, real].T)
    if dWo is not None:
        d_w = dS.shape[0] - dWo.shape[1]
        np.add.at(dWo, enc.flags, dS[d_w:].T)
    return dS, dF, db
