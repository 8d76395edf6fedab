"""Randomness and distribution diagnostics for extracted innovations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateSequenceError, SmallSampleError

RUNS_MIN_LENGTH = 25


@dataclass(frozen=True)
class RunsTestReport:
    n: int
    runs: int
    expected_runs: float
    variance_runs: float
    z: float
    p: float

    def as_dict(self) -> dict:
        return {"n_effective": self.n, "runs": self.runs, "expected_runs": self.expected_runs,
                "variance_runs": self.variance_runs, "z": self.z, "p_value": self.p}


def runs_up_down_count(seq) -> tuple[int, int]:
    """Number of runs up and down and the effective length.

    Zero successive differences are dropped, so ``N_effective`` is one more
    than the number of non-zero differences.
    """
    runs, n_eff = kernels.runs_up_down(np.asarray(seq, dtype=np.float64))
    if n_eff < 2:
        raise DegenerateSequenceError("sequence has fewer than 2 distinct consecutive values")
    return runs, n_eff


def runs_test(seq) -> RunsTestReport:
    """Runs up and down test of the i.i.d. hypothesis (two-sided normal approximation)."""
    runs, n = runs_up_down_count(seq)
    if n < RUNS_MIN_LENGTH:
        raise SmallSampleError(
            f"runs test needs an effective length >= {RUNS_MIN_LENGTH}, got {n}; "
            "supply a longer sequence")
    expected = (2.0 * n - 1.0) / 3.0
    variance = (16.0 * n - 29.0) / 90.0
    z = (runs - expected) / math.sqrt(variance)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return RunsTestReport(n, runs, expected, variance, z, min(1.0, p))


def uniform_quantiles(size: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    """Midpoint quantiles of U[low, high]: the size-``size`` grid closest to it in W1."""
    return low + (high - low) * (np.arange(size) + 0.5) / size


def wasserstein_1d(a, b) -> float:
    """Exact W1 distance between the empirical distributions of ``a`` and ``b``.

    For equal sizes this is the mean absolute difference of the sorted samples.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein_1d: empty input")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    return float(kernels.wasserstein_sorted(a, b))


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between ``samples`` and a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    f = np.asarray(cdf(x), dtype=np.float64)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def critic_wasserstein(blocks_a, blocks_b, budget: int, seed: int, *, batch_size: int = 60,
                       learning_rate: float = 1e-3, lambda_gp: float = 1.0,
                       hidden_widths=(100, 50, 25)) -> float:
    """Critic estimate of W1 between two sets of blocks.

    A fresh gradient-penalised critic is trained for ``budget`` Adam steps to
    separate ``blocks_a`` (scored high) from ``blocks_b``; the result is the
    final mean-score gap over the full sets.
    """
    from .networks import critic_spec, init_mlp
    from .training import AdamState, TrainConfig, _critic_step
    from .data import stream

    a = np.atleast_2d(np.asarray(blocks_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(blocks_b, dtype=np.float64))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("critic_wasserstein: empty block set")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"block widths differ: {a.shape[1]} vs {b.shape[1]}")
    n = a.shape[1]
    critic = init_mlp(critic_spec(n, hidden_widths), np.random.SeedSequence(seed))
    config = TrainConfig(learning_rate=learning_rate, m=1, n=n)
    state = AdamState.zeros_like(critic.params())
    rng = stream(seed, 7)
    for _ in range(budget):
        ia = rng.integers(0, a.shape[0], size=batch_size)
        ib = rng.integers(0, b.shape[0], size=batch_size)
        critic, state, _, _ = _critic_step(critic, state, a[ia], b[ib], lambda_gp, config,
                                           rng, 0)
    return float(critic(a)[:, 0].mean() - critic(b)[:, 0].mean())
