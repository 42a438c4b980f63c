"""Central finite-difference gradient checking."""
from dataclasses import dataclass, field

import numpy as np

MIN_EPSILON = 1e-6
MAX_EPSILON = 1e-4


@dataclass
class GradCheckReport:
    per_block: dict
    max_error: float
    tolerance: float
    worst: tuple = None
    nonfinite_block: str = None
    n_checked: int = 0
    kinks: list = field(default_factory=list)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.nonfinite_block is None and self.max_error < self.tolerance

    def failing_blocks(self):
        bad = [name for name, err in self.per_block.items() if not err < self.tolerance]
        if self.nonfinite_block is not None and self.nonfinite_block not in bad:
            bad.append(self.nonfinite_block)
        return bad

    def format(self):
        lines = [f"{name:<10s} {err:.3e}" for name, err in self.per_block.items()]
        status = "PASS" if self.passed else "FAIL"
        lines.append(f"{'max':<10s} {self.max_error:.3e}  tolerance {self.tolerance:.0e}  {status}")
        if self.kinks:
            lines.append(f"skipped {len(self.kinks)} of {self.n_checked} scalars sitting on a kink")
        if self.nonfinite_block is not None:
            lines.append(f"non-finite loss while perturbing {self.nonfinite_block}")
        elif not self.passed:
            lines.append("failing blocks: " + ", ".join(self.failing_blocks()))
        return "\n".join(lines)


def relative_error(a, n):
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def _split(out):
    if isinstance(out, tuple):
        return out
    return out, None


def gradient_check(loss_fn, blocks, analytic, epsilon=1e-5, tolerance=1e-4):
    """Compare ``analytic`` gradients with central differences of ``loss_fn``.

    ``blocks`` maps names to the live arrays ``loss_fn`` reads; each scalar is
    perturbed in place by ``+-epsilon`` and restored.  Blocks missing from
    ``analytic`` are taken to have zero gradient.

    ``loss_fn`` may return ``(loss, signature)`` where the signature is any
    hashable description of the piecewise-smooth region (argmax positions,
    ReLU sign pattern).  If the signature at ``p +- eps`` differs from the one
    at ``p``, the stencil straddles a kink and the step is cut by 3x, down to
    ``1e-6``; scalars still straddling a kink there are listed in
    ``report.kinks`` and excluded from the error.
    """
    if not MIN_EPSILON <= epsilon <= MAX_EPSILON:
        raise ValueError(f"epsilon must lie in [{MIN_EPSILON}, {MAX_EPSILON}], got {epsilon}")
    _, base_sig = _split(loss_fn())
    per_block, kinks = {}, []
    worst, max_err, n_checked = None, 0.0, 0
    for name, arr in blocks.items():
        if arr.dtype != np.float64:
            raise TypeError(f"block {name} must be float64 for finite differences")
        grad = analytic.get(name)
        grad = np.zeros(arr.size) if grad is None else np.asarray(grad, dtype=np.float64).reshape(-1)
        flat = arr.reshape(-1)
        if not np.shares_memory(flat, arr):
            raise ValueError(f"block {name} is not contiguous")
        numeric = np.empty(flat.size)
        smooth = np.ones(flat.size, dtype=bool)
        for i in range(flat.size):
            orig = flat[i]
            eps = epsilon
            while True:
                flat[i] = orig + eps
                f_plus, s_plus = _split(loss_fn())
                flat[i] = orig - eps
                f_minus, s_minus = _split(loss_fn())
                flat[i] = orig
                if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                    per_block[name] = float("inf")
                    return GradCheckReport(per_block, float("inf"), tolerance, (name, i),
                                           nonfinite_block=name, n_checked=n_checked, kinks=kinks)
                if s_plus == base_sig and s_minus == base_sig:
                    break
                if eps <= MIN_EPSILON:
                    smooth[i] = False
                    kinks.append((name, i))
                    break
                eps = max(eps / 3.0, MIN_EPSILON)
            numeric[i] = (f_plus - f_minus) / (2.0 * eps)
            n_checked += 1
        err = np.where(smooth, relative_error(grad, numeric), 0.0)
        block_max = float(err.max()) if err.size else 0.0
        per_block[name] = block_max
        if err.size and (worst is None or block_max > max_err):
            max_err = block_max
            worst = (name, int(err.argmax()))
    return GradCheckReport(per_block, max_err, tolerance, worst, n_checked=n_checked, kinks=kinks)
