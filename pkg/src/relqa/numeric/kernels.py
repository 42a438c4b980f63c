"""Convolution and pooling kernels with backend selection.

The compiled extension is preferred; set ``RELQA_PURE_PYTHON=1`` to force the
numpy fallback.  ``BACKEND`` names the active one.
"""
import os
from dataclasses import dataclass

import numpy as np

from relqa.errors import DimensionError
from relqa.numeric import _pykernels

_backends = {"python": _pykernels}
try:
    from relqa.numeric import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    _backends["cython"] = _ckernels

if os.environ.get("RELQA_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
    _impl = _pykernels
else:
    _impl = _ckernels

BACKEND = _impl.NAME
CONV_MODES = ("wide", "narrow")


def available_backends():
    return sorted(_backends)


def get_backend(name):
    """Return the raw kernel module ``name`` (``"python"`` or ``"cython"``)."""
    try:
        return _backends[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None


@dataclass
class FilterBank:
    """``n`` filters of shape ``(d, m)`` stacked as ``(n, d, m)`` plus a bias per map."""

    filters: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.filters = np.ascontiguousarray(self.filters, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.filters.ndim != 3 or min(self.filters.shape) < 1:
            raise DimensionError(f"filters must be (n, d, m) with all dims >= 1, got {self.filters.shape}")
        if self.bias.shape != (self.filters.shape[0],):
            raise DimensionError(f"bias shape {self.bias.shape} != ({self.filters.shape[0]},)")

    @property
    def n(self):
        return self.filters.shape[0]

    @property
    def d(self):
        return self.filters.shape[1]

    @property
    def m(self):
        return self.filters.shape[2]


def _as_matrix(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _check_mode(mode):
    if mode not in CONV_MODES:
        raise ValueError(f"conv mode must be one of {CONV_MODES}, got {mode!r}")
    return mode == "wide"


def output_length(L, m, mode):
    return L + m - 1 if _check_mode(mode) else L - m + 1


def _check_input(S, fb, mode):
    S = _as_matrix(S, "S")
    wide = _check_mode(mode)
    if S.shape[0] != fb.d:
        raise DimensionError(f"input depth {S.shape[0]} != filter depth {fb.d}")
    if S.shape[1] < 1:
        raise DimensionError("input has no columns")
    if not wide and S.shape[1] < fb.m:
        raise DimensionError(f"narrow convolution needs length >= {fb.m}, got {S.shape[1]}")
    return S, wide


def conv1d_forward(S, fb, mode="wide"):
    """Convolve ``S`` (d x L) with every filter of ``fb`` and add the bias.

    Returns the ``(n, L')`` feature-map matrix, ``L' = L + m - 1`` (wide) or
    ``L - m + 1`` (narrow).
    """
    S, wide = _check_input(S, fb, mode)
    return _impl.conv1d_forward(S, fb.filters, fb.bias, wide)


def conv1d_backward(S, fb, mode, upstream):
    """Gradients ``(dS, dFilters, dBias)`` of :func:`conv1d_forward`."""
    S, wide = _check_input(S, fb, mode)
    G = _as_matrix(upstream, "upstream gradient")
    expected = (fb.n, output_length(S.shape[1], fb.m, mode))
    if G.shape != expected:
        raise DimensionError(f"upstream gradient shape {G.shape} != {expected}")
    return _impl.conv1d_backward(S, fb.filters, wide, G)


def maxpool_rows(C):
    """Row-wise max and first-occurrence argmax column of ``C``."""
    C = _as_matrix(C, "C")
    if C.shape[1] < 1:
        raise DimensionError("cannot max-pool an empty row dimension")
    return _impl.maxpool_rows(C)


def maxpool_backward(argmax, upstream, n_cols):
    """Route ``upstream[i]`` to column ``argmax[i]`` of row ``i``."""
    upstream = np.asarray(upstream, dtype=np.float64)
    dC = np.zeros((len(argmax), n_cols))
    dC[np.arange(len(argmax)), argmax] = upstream
    return dC


def encode_forward(S, fb, mode="wide"):
    """Fused ``maxpool(relu(conv(S)))``; returns ``(x, argmax, C)``."""
    S, wide = _check_input(S, fb, mode)
    return _impl.encode_forward(S, fb.filters, fb.bias, wide)


def encode_backward(S, fb, mode, C, argmax, dx):
    """Backward of :func:`encode_forward`; returns ``(dS, dFilters, dBias)``."""
    S, wide = _check_input(S, fb, mode)
    dx = np.ascontiguousarray(dx, dtype=np.float64)
    if dx.shape != (fb.n,):
        raise DimensionError(f"dx shape {dx.shape} != ({fb.n},)")
    argmax = np.ascontiguousarray(argmax, dtype=np.intp)
    return _impl.encode_backward(S, fb.filters, _as_matrix(C, "C"), argmax, dx, wide)
