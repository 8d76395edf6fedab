"""Generative probabilistic forecasting from weak innovations.

Past innovations come from the encoder; future ones are drawn i.i.d. from
U[-1, 1].  The decoder maps each mixed window to a sample of the future
value, so every trajectory is one Monte Carlo draw from the conditional law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import stream
from .errors import InsufficientHistoryError
from .networks import WiaeModel, encode_series

DEFAULT_TRAJECTORIES = 1000


@dataclass(frozen=True)
class ForecastRequest:
    origin: int
    horizon: int = 1
    num_trajectories: int = DEFAULT_TRAJECTORIES
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.num_trajectories < 1:
            raise ValueError("num_trajectories must be >= 1")


@dataclass(frozen=True, eq=False)
class ForecastDistribution:
    samples: np.ndarray  # (S, T), original units
    mean: np.ndarray
    median: np.ndarray
    request: ForecastRequest

    @classmethod
    def from_samples(cls, samples: np.ndarray, request: ForecastRequest) -> "ForecastDistribution":
        mean, median = point_estimates_of(samples)
        return cls(samples, mean, median, request)


def point_estimates_of(samples) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no samples")
    # np.median averages the two central order statistics for even counts.
    return x.mean(axis=0), np.median(x, axis=0)


def point_estimates(dist: ForecastDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Per-step sample mean (for squared errors) and median (for absolute errors)."""
    return point_estimates_of(dist.samples)


def innovation_history(model: WiaeModel, observed) -> np.ndarray:
    """Innovations of a raw series; the last one belongs to the last observation."""
    x = np.asarray(observed, dtype=np.float64)
    if x.size < model.m:
        raise InsufficientHistoryError(
            f"need at least m={model.m} observations, got {x.size}")
    return encode_series(model, model.standardizer.apply(x))


def future_uniforms(request: ForecastRequest) -> np.ndarray:
    """``(S, T)`` uniforms; row ``s`` comes from its own substream of the seed."""
    out = np.empty((request.num_trajectories, request.horizon))
    for s in range(request.num_trajectories):
        out[s] = stream(request.seed, s).uniform(-1.0, 1.0, size=request.horizon)
    return out


def decode_futures(model: WiaeModel, history: np.ndarray, futures: np.ndarray) -> np.ndarray:
    """Decode ``(S, T)`` future innovations appended to ``history``; standardized output."""
    m = model.m
    s, t = futures.shape
    past = np.broadcast_to(history[-(m - 1):] if m > 1 else history[:0], (s, m - 1))
    full = np.concatenate([past, futures], axis=1)  # oldest first, (S, m - 1 + T)
    # Window for step k is (u_{t+k}, ..., u_{t+1}, v_t, ...), newest first.
    idx = (m - 1 + np.arange(t))[:, None] - np.arange(m)[None, :]
    windows = full[:, idx]  # (S, T, m)
    return model.decoder(windows.reshape(-1, m)).reshape(s, t)


def sample_trajectories(model: WiaeModel, innovations, request: ForecastRequest,
                        futures: np.ndarray | None = None) -> ForecastDistribution:
    """Sample ``S`` future paths of length ``T`` given an innovation history."""
    hist = np.asarray(innovations, dtype=np.float64)
    if hist.size < model.m - 1:
        raise InsufficientHistoryError(
            f"need at least m-1={model.m - 1} past innovations, got {hist.size}")
    if futures is None:
        futures = future_uniforms(request)
    z = decode_futures(model, hist, futures)
    return ForecastDistribution.from_samples(model.standardizer.invert(z), request)


def history_needed(model: WiaeModel) -> int:
    """Raw observations needed for one forecast: m for the first innovation,
    plus m - 2 more so that m - 1 innovations are available."""
    return max(model.m, 2 * model.m - 2)


def forecast(model: WiaeModel, series, request: ForecastRequest) -> ForecastDistribution:
    """Forecast ``request.horizon`` steps past ``series[request.origin]``."""
    x = np.asarray(series, dtype=np.float64)
    t = request.origin
    need = history_needed(model)
    if not 0 <= t < x.size or t + 1 < need:
        raise InsufficientHistoryError(
            f"origin {t} leaves {t + 1} observations; need {need}")
    hist = innovation_history(model, x[t + 1 - need: t + 1])
    return sample_trajectories(model, hist, request)


def rolling_forecasts(model: WiaeModel, series, origins, horizon: int,
                      num_trajectories: int = DEFAULT_TRAJECTORIES,
                      seed: int = 0) -> np.ndarray:
    """Samples for many origins at once: array ``(len(origins), S, T)``.

    The ``(S, T)`` uniforms for origin ``t`` come from substream
    ``(seed, t)``, so results do not depend on how origins are batched.
    """
    x = np.asarray(series, dtype=np.float64)
    origins = np.asarray(origins, dtype=np.int64)
    need = history_needed(model)
    if origins.size and (origins.min() + 1 < need or origins.max() >= x.size):
        raise InsufficientHistoryError(f"origins must lie in [{need - 1}, {x.size})")
    innov = encode_series(model, model.standardizer.apply(x))  # innov[j] <-> x[j + m - 1]
    out = np.empty((origins.size, num_trajectories, horizon))
    for i, t in enumerate(origins):
        hist = innov[: t - model.m + 2]
        futures = stream(seed, int(t)).uniform(-1.0, 1.0, size=(num_trajectories, horizon))
        out[i] = model.standardizer.invert(decode_futures(model, hist, futures))
    return out
