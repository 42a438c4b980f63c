"""Pure numpy convolution / pooling kernels.

Reference backend, used when the compiled ``_ckernels`` extension is not
available (or when ``RELQA_PURE_PYTHON=1``).  All functions take validated,
C-contiguous float64 arrays; shape checking lives in :mod:`relqa.numeric.kernels`.

Layout: ``S`` is ``(d, L)``, ``filters`` is ``(n, d, m)``, ``C`` is ``(n, L')``.
Output column ``j`` reads input column ``j - pad + k`` through filter column
``k``, where ``pad = m - 1`` in wide mode and ``0`` in narrow mode; columns
outside ``[0, L)`` are implicit zeros and are never materialized.
"""
import numpy as np

NAME = "python"


def _out_len(L, m, wide):
    return L + m - 1 if wide else L - m + 1


def _window(k, L, Lout, pad):
    # Output range [lo, hi) whose input column j - pad + k falls inside [0, L).
    lo = max(0, pad - k)
    hi = min(Lout, L + pad - k)
    return lo, hi, lo - pad + k


def conv1d_forward(S, filters, bias, wide):
    d, L = S.shape
    n, _, m = filters.shape
    pad = m - 1 if wide else 0
    Lout = _out_len(L, m, wide)
    C = np.empty((n, Lout))
    C[:] = bias[:, None]
    for k in range(m):
        lo, hi, a = _window(k, L, Lout, pad)
        if hi > lo:
            C[:, lo:hi] += filters[:, :, k] @ S[:, a:a + hi - lo]
    return C


def conv1d_backward(S, filters, wide, G):
    d, L = S.shape
    n, _, m = filters.shape
    pad = m - 1 if wide else 0
    Lout = G.shape[1]
    dS = np.zeros_like(S)
    dF = np.zeros_like(filters)
    for k in range(m):
        lo, hi, a = _window(k, L, Lout, pad)
        if hi > lo:
            Gk = G[:, lo:hi]
            dF[:, :, k] = Gk @ S[:, a:a + hi - lo].T
            dS[:, a:a + hi - lo] += filters[:, :, k].T @ Gk
    return dS, dF, G.sum(axis=1)


def maxpool_rows(C):
    idx = C.argmax(axis=1)
    return C[np.arange(C.shape[0]), idx], idx


def encode_forward(S, filters, bias, wide):
    """conv -> relu -> row max. Returns (x, argmax, C) with C pre-activation."""
    C = conv1d_forward(S, filters, bias, wide)
    x, idx = maxpool_rows(np.maximum(C, 0.0))
    return x, idx, C


def encode_backward(S, filters, C, argmax, dx, wide):
    """Backward of :func:`encode_forward`.

    Only the pooled column of each feature map carries gradient, so the cost
    is ``O(n * d * m)`` rather than a full convolution transpose.
    """
    d, L = S.shape
    n, _, m = filters.shape
    pad = m - 1 if wide else 0
    rows = np.arange(n)
    g = np.where(C[rows, argmax] > 0.0, dx, 0.0)

    cols = argmax[:, None] - pad + np.arange(m)[None, :]
    valid = (cols >= 0) & (cols < L)
    safe = np.clip(cols, 0, L - 1)

    # S[:, safe] -> (d, n, m); reorder to (n, d, m)
    dF = S[:, safe].transpose(1, 0, 2) * (g[:, None, None] * valid[:, None, :])
    contrib = (g[:, None, None] * filters).transpose(0, 2, 1)[valid]
    dST = np.zeros((L, d))
    np.add.at(dST, cols[valid], contrib)
    return np.ascontiguousarray(dST.T), dF, g
