"""Small dense layers with hand-written backward passes."""
import numpy as np

from relqa.errors import DimensionError


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(x, upstream):
    # subgradient at exactly 0 is 0
    return np.where(np.asarray(x) > 0.0, upstream, 0.0)


def _vec(v, name):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {v.shape}")
    return v


def bilinear(xq, M, xa):
    """``xq^T M xa``."""
    xq, xa = _vec(xq, "xq"), _vec(xa, "xa")
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (xq.shape[0], xa.shape[0]):
        raise DimensionError(f"M shape {M.shape} incompatible with |xq|={xq.shape[0]}, |xa|={xa.shape[0]}")
    return float(xq @ M @ xa)


def bilinear_backward(xq, M, xa, upstream=1.0):
    """Returns ``(dxq, dM, dxa)`` scaled by the scalar ``upstream``."""
    xq, xa = _vec(xq, "xq"), _vec(xa, "xa")
    return upstream * (M @ xa), upstream * np.outer(xq, xa), upstream * (M.T @ xq)


def affine(W, x, b):
    x, b = _vec(x, "x"), _vec(b, "b")
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (b.shape[0], x.shape[0]):
        raise DimensionError(f"W shape {W.shape} incompatible with |x|={x.shape[0]}, |b|={b.shape[0]}")
    return W @ x + b


def affine_backward(W, x, upstream):
    """Returns ``(dW, dx, db)`` for ``y = W x + b``."""
    upstream = _vec(upstream, "upstream")
    return np.outer(upstream, x), W.T @ upstream, upstream.copy()


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def softmax_nll(logits, label):
    """Stabilized softmax, ``-log p[label]`` and its gradient w.r.t. the logits."""
    z = _vec(logits, "logits")
    shifted = z - z.max()
    log_norm = np.log(np.exp(shifted).sum())
    probs = np.exp(shifted - log_norm)
    loss = float(log_norm - shifted[label])
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    return probs, loss, dlogits
