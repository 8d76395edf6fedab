"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the extension exactly; the extension is used
when it imports, this module otherwise.
"""

import numpy as np


def ar1_filter(noise, phi):
    u = np.asarray(noise, dtype=np.float64)
    out = np.empty_like(u)
    prev = 0.0
    for i in range(u.shape[0]):
        prev = phi * prev + u[i]
        out[i] = prev
    return out


def markov2_chain(uniforms, p_stay, start):
    v = np.asarray(uniforms, dtype=np.float64)
    out = np.empty(v.shape[0], dtype=np.int64)
    state = int(start)
    for i in range(v.shape[0]):
        if i > 0 and v[i] >= p_stay:
            state = 1 - state
        out[i] = state
    return out


def runs_up_down(seq):
    """Count maximal blocks of equal sign among the non-zero successive differences."""
    x = np.asarray(seq, dtype=np.float64)
    d = np.diff(x)
    s = np.sign(d[d != 0.0])
    if s.size == 0:
        return 0, 1
    runs = 1 + int(np.count_nonzero(s[1:] != s[:-1]))
    return runs, int(s.size) + 1


def crps_rows(samples, obs):
    """Energy-form CRPS of each row of ``samples`` against ``obs``."""
    x = np.sort(np.asarray(samples, dtype=np.float64), axis=1)
    y = np.asarray(obs, dtype=np.float64)
    s = x.shape[1]
    term1 = np.abs(x - y[:, None]).sum(axis=1) / s
    coef = 2.0 * np.arange(s) - s + 1.0
    term2 = (x * coef).sum(axis=1) / (s * s)
    return term1 - term2


def wasserstein_sorted(a, b):
    """Exact W1 between two empirical laws given sorted samples."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    allv = np.concatenate([a, b])
    allv.sort(kind="mergesort")
    deltas = np.diff(allv)
    fa = np.searchsorted(a, allv[:-1], side="right") / a.size
    fb = np.searchsorted(b, allv[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * deltas))
