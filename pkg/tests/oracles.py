"""Brute-force reference implementations, written without the package's kernels."""
import math


def conv1d_loops(S, filters, bias, wide):
    """Sliding window over an explicitly zero-padded copy of ``S``."""
    d, L = len(S), len(S[0])
    n, m = len(filters), len(filters[0][0])
    pad = m - 1 if wide else 0
    padded = [[0.0] * pad + list(row) + [0.0] * pad for row in S]
    width = L + 2 * pad - m + 1
    out = [[0.0] * width for _ in range(n)]
    for i in range(n):
        for j in range(width):
            acc = bias[i]
            for r in range(d):
                for k in range(m):
                    acc += filters[i][r][k] * padded[r][j + k]
            out[i][j] = acc
    return out


def maxpool_scan(C):
    vals, idx = [], []
    for row in C:
        best, at = row[0], 0
        for j, v in enumerate(row):
            if v > best:
                best, at = v, j
        vals.append(best)
        idx.append(at)
    return vals, idx


def bilinear_loops(xq, M, xa):
    total = 0.0
    for i in range(len(xq)):
        for j in range(len(xa)):
            total += xq[i] * M[i][j] * xa[j]
    return total


def affine_loops(W, x, b):
    return [b[i] + sum(W[i][j] * x[j] for j in range(len(x))) for i in range(len(b))]


def average_precision_def(ranked_labels):
    """Mean over relevant positions of precision at that cutoff."""
    hits, precisions = 0, []
    for k, rel in enumerate(ranked_labels, start=1):
        if rel:
            hits += 1
            precisions.append(hits / k)
    return sum(precisions) / len(precisions)


def reciprocal_rank_def(ranked_labels):
    for k, rel in enumerate(ranked_labels, start=1):
        if rel:
            return 1.0 / k
    return 0.0


def rank_candidates(scores):
    """``scores``: list of (cid, score); descending score, ties by cid string order."""
    return [cid for cid, _ in sorted(scores, key=lambda t: (-t[1], t[0]))]


def central_difference(f, x, h=1e-6):
    x = [float(v) for v in x]
    out = []
    for i in range(len(x)):
        up, down = list(x), list(x)
        up[i] += h
        down[i] -= h
        out.append((f(up) - f(down)) / (2 * h))
    return out


def log_sum_exp(z):
    top = max(z)
    return top + math.log(sum(math.exp(v - top) for v in z))
