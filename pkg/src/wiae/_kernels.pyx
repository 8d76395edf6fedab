# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; ``_kernels_py`` holds the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def ar1_filter(noise, double phi):
    cdef const double[:] u = np.ascontiguousarray(noise, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef double prev = 0.0
    for i in range(n):
        prev = phi * prev + u[i]
        o[i] = prev
    return out


def markov2_chain(uniforms, double p_stay, int start):
    cdef const double[:] v = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] o = out
    cdef cnp.int64_t state = start
    for i in range(n):
        if i > 0 and v[i] >= p_stay:
            state = 1 - state
        o[i] = state
    return out


def runs_up_down(seq):
    cdef const double[:] x = np.ascontiguousarray(seq, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i
    cdef long runs = 0, nonzero = 0
    cdef int prev = 0, cur
    cdef double d
    for i in range(1, n):
        d = x[i] - x[i - 1]
        if d > 0:
            cur = 1
        elif d < 0:
            cur = -1
        else:
            continue
        nonzero += 1
        if cur != prev:
            runs += 1
            prev = cur
    if nonzero == 0:
        return 0, 1
    return int(runs), int(nonzero + 1)


def crps_rows(samples, obs):
    x_sorted = np.sort(np.ascontiguousarray(samples, dtype=np.float64), axis=1)
    cdef const double[:, :] x = x_sorted
    cdef const double[:] y = np.ascontiguousarray(obs, dtype=np.float64)
    cdef Py_ssize_t rows = x.shape[0], s = x.shape[1], r, i
    out = np.empty(rows, dtype=np.float64)
    cdef double[:] o = out
    cdef double t1, t2, ss = <double>s
    for r in range(rows):
        t1 = 0.0
        t2 = 0.0
        for i in range(s):
            t1 += fabs(x[r, i] - y[r])
            t2 += (2.0 * i - ss + 1.0) * x[r, i]
        o[r] = t1 / ss - t2 / (ss * ss)
    return out


def wasserstein_sorted(a, b):
    cdef const double[:] xa = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:] xb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t na = xa.shape[0], nb = xb.shape[0], i = 0, j = 0
    cdef double fa = 0.0, fb = 0.0, prev, cur, total = 0.0
    cdef double ia = 1.0 / na, ib = 1.0 / nb
    # Walk the merged support; between consecutive points the CDF gap is constant.
    if xa[0] <= xb[0]:
        prev = xa[0]
    else:
        prev = xb[0]
    while i < na or j < nb:
        if j >= nb or (i < na and xa[i] <= xb[j]):
            cur = xa[i]
        else:
            cur = xb[j]
        total += fabs(fa - fb) * (cur - prev)
        while i < na and xa[i] == cur:
            fa += ia
            i += 1
        while j < nb and xb[j] == cur:
            fb += ib
            j += 1
        prev = cur
    return total
