# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled convolution / pooling kernels.

Same contracts as ``_pykernels``.  The convolution itself is ``m`` shifted
GEMMs dispatched straight to BLAS (no Python-level slicing); pooling and the
sparse pooled backward are plain C loops.

Row-major ``(r, c)`` arrays are handed to the column-major BLAS as their
transposes, hence the operand order in the ``dgemm`` calls below.
"""
import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "cython"


cdef inline Py_ssize_t _imax(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a > b else b


cdef inline Py_ssize_t _imin(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a < b else b


cdef void _conv_into(double[:, ::1] S, double[:, :, ::1] Ft, double[:, ::1] C,
                     Py_ssize_t pad) nogil:
    # C (n, Lout) += sum_k Ft[k] @ S[:, shifted]; C must hold the bias already.
    cdef Py_ssize_t d = S.shape[0], L = S.shape[1]
    cdef Py_ssize_t m = Ft.shape[0], n = Ft.shape[1], Lout = C.shape[1]
    cdef Py_ssize_t k, lo, hi, a
    cdef int M, N, K, lda, ldb, ldc
    cdef double one = 1.0
    cdef char tn = b'N'
    for k in range(m):
        lo = _imax(0, pad - k)
        hi = _imin(Lout, L + pad - k)
        if hi <= lo:
            continue
        a = lo - pad + k
        M = <int>(hi - lo); N = <int>n; K = <int>d
        lda = <int>L; ldb = <int>d; ldc = <int>Lout
        dgemm(&tn, &tn, &M, &N, &K, &one, &S[0, a], &lda,
              &Ft[k, 0, 0], &ldb, &one, &C[0, lo], &ldc)


def conv1d_forward(S, filters, bias, bint wide):
    cdef double[:, ::1] Sv = S
    cdef Py_ssize_t L = S.shape[1], n = filters.shape[0], m = filters.shape[2]
    cdef Py_ssize_t pad = m - 1 if wide else 0
    cdef Py_ssize_t Lout = L + m - 1 if wide else L - m + 1
    Ft = np.ascontiguousarray(filters.transpose(2, 0, 1))
    C = np.empty((n, Lout))
    C[:] = bias[:, None]
    _conv_into(Sv, Ft, C, pad)
    return C


def conv1d_backward(S, filters, bint wide, G):
    cdef double[:, ::1] Sv = S
    cdef double[:, ::1] Gv = G
    cdef Py_ssize_t d = S.shape[0], L = S.shape[1]
    cdef Py_ssize_t n = filters.shape[0], m = filters.shape[2], Lout = G.shape[1]
    cdef Py_ssize_t pad = m - 1 if wide else 0
    cdef Py_ssize_t k, lo, hi, a
    Ft_arr = np.ascontiguousarray(filters.transpose(2, 0, 1))
    dFt_arr = np.zeros((m, n, d))
    dS_arr = np.zeros((d, L))
    cdef double[:, :, ::1] Ft = Ft_arr
    cdef double[:, :, ::1] dFt = dFt_arr
    cdef double[:, ::1] dS = dS_arr
    cdef int M, N, K, lda, ldb, ldc
    cdef double one = 1.0, zero = 0.0
    cdef char tn = b'N', tt = b'T'
    with nogil:
        for k in range(m):
            lo = _imax(0, pad - k)
            hi = _imin(Lout, L + pad - k)
            if hi <= lo:
                continue
            a = lo - pad + k
            # dF_k^T (d, n) = S_sub (d, w) . G_sub^T (w, n)
            M = <int>d; N = <int>n; K = <int>(hi - lo)
            lda = <int>L; ldb = <int>Lout; ldc = <int>d
            dgemm(&tt, &tn, &M, &N, &K, &one, &Sv[0, a], &lda,
                  &Gv[0, lo], &ldb, &zero, &dFt[k, 0, 0], &ldc)
            # dS_sub^T (w, d) += G_sub^T (w, n) . F_k (n, d)
            M = <int>(hi - lo); N = <int>d; K = <int>n
            lda = <int>Lout; ldb = <int>d; ldc = <int>L
            dgemm(&tn, &tt, &M, &N, &K, &one, &Gv[0, lo], &lda,
                  &Ft[k, 0, 0], &ldb, &one, &dS[0, a], &ldc)
    return dS_arr, np.ascontiguousarray(dFt_arr.transpose(1, 2, 0)), G.sum(axis=1)


cdef void _rowmax(double[:, ::1] C, double[::1] out, Py_ssize_t[::1] idx,
                  bint clamp) nogil:
    # First-occurrence argmax per row; clamp=True pools relu(C) without forming it.
    cdef Py_ssize_t i, j, best
    cdef double v, bv
    for i in range(C.shape[0]):
        best = 0
        bv = C[i, 0]
        if clamp and bv < 0.0:
            bv = 0.0
        for j in range(1, C.shape[1]):
            v = C[i, j]
            if clamp and v < 0.0:
                v = 0.0
            if v > bv:
                bv = v
                best = j
        out[i] = bv
        idx[i] = best


def maxpool_rows(C):
    cdef Py_ssize_t n = C.shape[0]
    vals = np.empty(n)
    idx = np.empty(n, dtype=np.intp)
    _rowmax(C, vals, idx, False)
    return vals, idx


def encode_forward(S, filters, bias, bint wide):
    C = conv1d_forward(S, filters, bias, wide)
    cdef Py_ssize_t n = C.shape[0]
    x = np.empty(n)
    idx = np.empty(n, dtype=np.intp)
    _rowmax(C, x, idx, True)
    return x, idx, C


def encode_backward(S, filters, C, argmax, dx, bint wide):
    cdef double[:, ::1] Sv = S
    cdef double[:, :, ::1] F = filters
    cdef double[:, ::1] Cv = C
    cdef Py_ssize_t[::1] am = argmax
    cdef double[::1] dxv = dx
    cdef Py_ssize_t d = S.shape[0], L = S.shape[1]
    cdef Py_ssize_t n = filters.shape[0], m = filters.shape[2]
    cdef Py_ssize_t pad = m - 1 if wide else 0
    dS_arr = np.zeros((d, L))
    dF_arr = np.zeros((n, d, m))
    g_arr = np.zeros(n)
    cdef double[:, ::1] dS = dS_arr
    cdef double[:, :, ::1] dF = dF_arr
    cdef double[::1] g = g_arr
    cdef Py_ssize_t i, k, r, col, j
    cdef double gi
    with nogil:
        for i in range(n):
            j = am[i]
            if Cv[i, j] <= 0.0:
                continue
            gi = dxv[i]
            g[i] = gi
            for k in range(m):
                col = j - pad + k
                if col < 0 or col >= L:
                    continue
                for r in range(d):
                    dF[i, r, k] = gi * Sv[r, col]
                    dS[r, col] += gi * F[i, r, k]
    return dS_arr, dF_arr, g_arr
