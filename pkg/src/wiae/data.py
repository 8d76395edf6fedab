"""Synthetic processes, CSV series I/O, standardization and block extraction."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .errors import DataError, DegenerateDataError, FormatError, InsufficientHistoryError, ParseError

LAR_COEF = 0.5
MA_COEF = 2.5
MC_STAY = 0.6
MC_EMISSIONS = (0.0, 1.0)
DEFAULT_BURN_IN = 1000
DEFAULT_PERIOD = 300.0
TRAIN_FRACTION = 0.8
EPOCH = datetime(2023, 2, 1)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for substream ``key`` of ``seed``.

    Substreams are independent of each other and of the order in which they
    are requested.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class Standardizer:
    mean: float
    std: float

    @classmethod
    def fit(cls, values) -> "Standardizer":
        x = np.asarray(values, dtype=np.float64)
        std = float(x.std())
        if not std > 0:
            raise DegenerateDataError("training split is constant; cannot standardize")
        return cls(float(x.mean()), std)

    def apply(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


@dataclass(frozen=True, eq=False)
class SeriesDataset:
    values: np.ndarray
    period_seconds: float = DEFAULT_PERIOD
    name: str = "series"
    train_end: int | None = None
    start: datetime = EPOCH
    standardizer: Standardizer = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise DataError("series must be one-dimensional with at least 2 values")
        if not np.all(np.isfinite(v)):
            raise DataError("series contains non-finite values")
        object.__setattr__(self, "values", v)
        end = self.train_end
        if end is None:
            end = max(1, min(v.size - 1, int(math.floor(TRAIN_FRACTION * v.size))))
        if not 1 <= end < v.size:
            raise DataError(f"train_end={end} outside [1, {v.size})")
        object.__setattr__(self, "train_end", int(end))
        object.__setattr__(self, "standardizer", Standardizer.fit(v[:end]))

    @property
    def train(self) -> np.ndarray:
        return self.values[: self.train_end]

    @property
    def test(self) -> np.ndarray:
        return self.values[self.train_end:]

    def standardized(self) -> np.ndarray:
        return self.standardizer.apply(self.values)

    def with_split(self, train_end: int) -> "SeriesDataset":
        return replace(self, train_end=train_end)


def standardize(dataset: SeriesDataset) -> np.ndarray:
    return dataset.standardized()


def destandardize(values, standardizer: Standardizer) -> np.ndarray:
    return standardizer.invert(values)


# -- synthetic generators -------------------------------------------------

@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    length: int
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        kind = self.kind.upper()
        if kind == "AR1":
            kind = "LAR"
        if kind not in GENERATORS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.length < 1:
            raise ValueError("generator length must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


def _uniform_noise(spec: GeneratorSpec, noise) -> np.ndarray:
    total = spec.burn_in + spec.length
    if noise is not None:
        u = np.asarray(noise, dtype=np.float64)
        if u.shape != (total,):
            raise ValueError(f"noise override must have length burn_in + length = {total}")
        return u
    return stream(spec.seed, 0).uniform(-1.0, 1.0, size=total)


def lar_values(spec: GeneratorSpec, noise=None) -> np.ndarray:
    """``x_t = 0.5 x_{t-1} + u_t`` from ``x = 0``, burn-in discarded."""
    u = _uniform_noise(spec, noise)
    return kernels.ar1_filter(u, LAR_COEF)[spec.burn_in:]


def ma_values(spec: GeneratorSpec, noise=None) -> np.ndarray:
    """``x_t = u_t + 2.5 u_{t-1}``, burn-in discarded."""
    u = _uniform_noise(spec, noise)
    x = u.copy()
    x[1:] += MA_COEF * u[:-1]
    return x[spec.burn_in:]


def mc_values(spec: GeneratorSpec, noise=None) -> np.ndarray:
    """Two-state chain with P(stay)=0.6 started from its stationary law."""
    total = spec.burn_in + spec.length
    if noise is not None:
        v = np.asarray(noise, dtype=np.float64)
        if v.shape != (total,):
            raise ValueError(f"noise override must have length {total}")
        start = 0
    else:
        rng = stream(spec.seed, 0)
        start = int(rng.random() < 0.5)
        v = rng.random(total)
    states = kernels.markov2_chain(v, MC_STAY, start)[spec.burn_in:]
    return np.asarray(MC_EMISSIONS, dtype=np.float64)[states]


GENERATORS = {"LAR": lar_values, "MA": ma_values, "MC": mc_values}


def generate(spec: GeneratorSpec, period: float = DEFAULT_PERIOD, noise=None) -> SeriesDataset:
    """Dataset wrapper around the ``*_values`` generators (needs ``length >= 2``)."""
    return SeriesDataset(GENERATORS[spec.kind](spec, noise), period, spec.kind)


def gen_lar(spec: GeneratorSpec, noise=None) -> SeriesDataset:
    return generate(replace(spec, kind="LAR"), noise=noise)


def gen_ma(spec: GeneratorSpec, noise=None) -> SeriesDataset:
    return generate(replace(spec, kind="MA"), noise=noise)


def gen_mc(spec: GeneratorSpec, noise=None) -> SeriesDataset:
    return generate(replace(spec, kind="MC"), noise=noise)


# -- CSV ------------------------------------------------------------------

def _parse_time(text: str, line: int) -> datetime:
    try:
        return datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError:
        raise ParseError(f"bad ISO-8601 timestamp {text!r}", line) from None


def load_csv(path, name: str | None = None, train_end: int | None = None) -> SeriesDataset:
    """Read a ``timestamp,value`` file with a constant sampling period.

    Lines starting with ``#`` before the header are ignored.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    lineno = 0
    while lineno < len(lines) and lines[lineno].startswith("#"):
        lineno += 1
    if lineno >= len(lines) or not lines[lineno].strip():
        raise ParseError("empty file: missing 'timestamp,value' header", lineno + 1)
    header = [h.strip() for h in lines[lineno].split(",")]
    if header != ["timestamp", "value"]:
        raise ParseError(f"expected header 'timestamp,value', got {lines[lineno]!r}", lineno + 1)

    times: list[datetime] = []
    values: list[float] = []
    reader = csv.reader(io.StringIO("\n".join(lines[lineno + 1:])))
    for offset, row in enumerate(reader):
        ln = lineno + 2 + offset
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", ln)
        times.append(_parse_time(row[0], ln))
        try:
            val = float(row[1])
        except ValueError:
            raise ParseError(f"bad value {row[1]!r}", ln) from None
        if not math.isfinite(val):
            raise DataError(f"line {ln}: non-finite value {row[1]!r}")
        values.append(val)
    if len(values) < 2:
        raise ParseError("need at least two data rows", lineno + 1)

    period = (times[1] - times[0]).total_seconds()
    if period <= 0:
        raise FormatError("timestamps must be strictly increasing")
    for i in range(2, len(times)):
        step = (times[i] - times[i - 1]).total_seconds()
        if step != period:
            raise FormatError(
                f"irregular spacing at row {i + 1}: {step:g}s instead of {period:g}s")
    return SeriesDataset(np.array(values), period, name or path.stem, train_end, times[0])


def series_csv_text(values, period: float = DEFAULT_PERIOD, start: datetime = EPOCH,
                    comments: list[str] | None = None) -> str:
    out = [f"# {c}" for c in comments or []]
    out.append("timestamp,value")
    step = timedelta(seconds=period)
    for i, v in enumerate(np.asarray(values, dtype=np.float64)):
        out.append(f"{(start + i * step).isoformat()},{float(v)!r}")
    return "\n".join(out) + "\n"


def write_csv(path, dataset: SeriesDataset, comments: list[str] | None = None) -> None:
    Path(path).write_text(series_csv_text(dataset.values, dataset.period_seconds,
                                          dataset.start, comments))


# -- blocks ---------------------------------------------------------------

def make_blocks(series, n: int, stride: int = 1) -> np.ndarray:
    """Overlapping blocks ``(x_t, ..., x_{t-n+1})`` for ``t = n-1, n-1+stride, ...``."""
    x = np.asarray(series, dtype=np.float64)
    if x.shape[-1] < n:
        raise InsufficientHistoryError(f"series of length {x.shape[-1]} shorter than n={n}")
    return sliding_window_view(x, n, axis=-1)[..., ::stride, ::-1]
