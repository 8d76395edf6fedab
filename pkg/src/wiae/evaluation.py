"""Point and distributional forecast scores, outlier exclusion and eCDFs.

Squared-error metrics are meant to be fed the sample mean of a probabilistic
forecast, absolute-error metrics its sample median.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import UndefinedMetricError

POINT_METRICS = ("NMSE", "NMeSE", "NMAE", "NMeAE", "MASE", "sMAPE")
ALL_METRICS = POINT_METRICS + ("CRPS",)
OUTLIER_SIGMAS = 3.0


@dataclass(frozen=True)
class MetricReport:
    values: dict[str, float]
    evaluated: int
    excluded: int = 0
    step: int = 1
    extra: dict[str, str] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    @property
    def total(self) -> int:
        return self.evaluated + self.excluded

    def with_values(self, **values: float) -> "MetricReport":
        return MetricReport({**self.values, **values}, self.evaluated, self.excluded,
                            self.step, self.extra)

    def to_text(self) -> str:
        """Flat ``key=value`` lines; floats use ``repr`` so they round-trip."""
        lines = [f"{k}={v}" for k, v in self.extra.items()]
        lines += [f"step={self.step}", f"evaluated={self.evaluated}", f"excluded={self.excluded}"]
        lines += [f"{k}={self.values[k]!r}" for k in ALL_METRICS if k in self.values]
        return "\n".join(lines) + "\n"


def _pair(truth, forecast) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(truth, dtype=np.float64).ravel()
    f = np.asarray(forecast, dtype=np.float64).ravel()
    if x.size != f.size:
        raise ValueError(f"truth and forecast lengths differ: {x.size} vs {f.size}")
    if x.size == 0:
        raise ValueError("empty truth series")
    return x, f


def nmse(truth, forecast) -> float:
    x, f = _pair(truth, forecast)
    scale = np.mean(x * x)
    if scale == 0:
        raise UndefinedMetricError("NMSE", "truth is identically zero")
    return float(np.mean((x - f) ** 2) / scale)


def nmese(truth, forecast) -> float:
    x, f = _pair(truth, forecast)
    scale = np.mean(x * x)
    if scale == 0:
        raise UndefinedMetricError("NMeSE", "truth is identically zero")
    return float(np.median((x - f) ** 2 / scale))


def nmae(truth, forecast) -> float:
    x, f = _pair(truth, forecast)
    scale = np.mean(np.abs(x))
    if scale == 0:
        raise UndefinedMetricError("NMAE", "truth is identically zero")
    return float(np.mean(np.abs(x - f)) / scale)


def nmeae(truth, forecast) -> float:
    x, f = _pair(truth, forecast)
    scale = np.mean(np.abs(x))
    if scale == 0:
        raise UndefinedMetricError("NMeAE", "truth is identically zero")
    return float(np.median(np.abs(x - f) / scale))


def mase(truth, forecast, s: int) -> float:
    """MAE relative to the ``s``-step naive forecaster ``x_{t-s}`` on the same truth."""
    x, f = _pair(truth, forecast)
    if s < 1:
        raise ValueError("step s must be >= 1")
    if x.size <= s:
        raise UndefinedMetricError("MASE", f"need more than s={s} points, got {x.size}")
    naive = np.mean(np.abs(x[s:] - x[:-s]))
    if naive == 0:
        raise UndefinedMetricError("MASE", f"truth is constant at lag {s}")
    return float(np.mean(np.abs(x - f)) / naive)


def smape(truth, forecast) -> float:
    """Symmetric MAPE in [0, 2]; a point with truth = forecast = 0 contributes 0."""
    x, f = _pair(truth, forecast)
    num = np.abs(x - f)
    den = (np.abs(x) + np.abs(f)) / 2.0
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(np.mean(terms))


def point_metrics(truth, forecast, s: int = 1, median_forecast=None) -> MetricReport:
    """The six point metrics.  ``forecast`` feeds the squared-error metrics and
    ``median_forecast`` (default: ``forecast``) the absolute-error ones."""
    x, f = _pair(truth, forecast)
    med = f if median_forecast is None else _pair(x, median_forecast)[1]
    values = {
        "NMSE": nmse(x, f),
        "NMeSE": nmese(x, f),
        "NMAE": nmae(x, med),
        "NMeAE": nmeae(x, med),
        "MASE": mase(x, med, s),
        "sMAPE": smape(x, med),
    }
    return MetricReport(values, x.size, 0, s)


def crps(samples, observation: float) -> float:
    """Energy-form CRPS of one sample set; i = j pairs are included."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("crps needs at least one sample")
    return float(kernels.crps_rows(x[None, :], np.array([float(observation)]))[0])


def crps_mean(samples, observations) -> float:
    """Mean CRPS over a test set; ``samples`` is ``(N, S)``."""
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    y = np.asarray(observations, dtype=np.float64).ravel()
    if x.shape[0] != y.size:
        raise ValueError(f"{x.shape[0]} sample rows for {y.size} observations")
    if x.shape[1] == 0:
        raise ValueError("crps needs at least one sample")
    return float(np.mean(kernels.crps_rows(np.ascontiguousarray(x), y)))


def outlier_mask(truth, basis: str = "truth", forecast=None) -> np.ndarray:
    """True where a point lies strictly more than 3 population std from the mean.

    ``basis="error"`` applies the rule to ``truth - forecast`` instead.
    """
    x = np.asarray(truth, dtype=np.float64).ravel()
    if basis == "error":
        if forecast is None:
            raise ValueError("basis='error' needs a forecast")
        x = x - np.asarray(forecast, dtype=np.float64).ravel()
    elif basis != "truth":
        raise ValueError(f"unknown outlier basis {basis!r}")
    if x.size < 2:
        raise ValueError("outlier filtering needs at least 2 points")
    return np.abs(x - x.mean()) > OUTLIER_SIGMAS * x.std()


def filter_outliers(truth, *companions, basis: str = "truth", forecast=None):
    """Drop outlier indices from ``truth`` and every companion (first axis).

    Returns ``(truth, companions, excluded)``.
    """
    keep = ~outlier_mask(truth, basis, forecast)
    x = np.asarray(truth, dtype=np.float64).ravel()
    kept = [np.asarray(c)[keep] for c in companions]
    return x[keep], kept, int((~keep).sum())


def summarize_samples(samples, truth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-point sample mean, sample median and CRPS of ``(N, S)`` samples."""
    smp = np.ascontiguousarray(np.atleast_2d(np.asarray(samples, dtype=np.float64)))
    y = np.asarray(truth, dtype=np.float64).ravel()
    if smp.shape[0] != y.size:
        raise ValueError(f"{smp.shape[0]} sample rows for {y.size} observations")
    return smp.mean(axis=1), np.median(smp, axis=1), kernels.crps_rows(smp, y)


def metrics_from_summaries(truth, mean, median, crps_values, s: int = 1,
                           basis: str = "truth") -> MetricReport:
    """All seven metrics from per-point summaries, after outlier exclusion."""
    x = np.asarray(truth, dtype=np.float64).ravel()
    x_kept, (mean_k, median_k, crps_k), excluded = filter_outliers(
        x, mean, median, crps_values, basis=basis, forecast=mean)
    report = point_metrics(x_kept, mean_k, s, median_k)
    values = {**report.values, "CRPS": float(np.mean(crps_k))}
    return MetricReport(values, report.evaluated, excluded, s)


def evaluate_samples(truth, samples, s: int = 1, basis: str = "truth") -> MetricReport:
    """All seven metrics for a probabilistic forecaster.

    ``samples`` is ``(N, S)``: one sample set per test point, all at step ``s``.
    """
    mean, median, crps_values = summarize_samples(samples, truth)
    return metrics_from_summaries(truth, mean, median, crps_values, s, basis)


def ecdf(errors) -> tuple[np.ndarray, np.ndarray]:
    """Right-continuous eCDF at the sorted unique error values."""
    e = np.sort(np.asarray(errors, dtype=np.float64).ravel())
    if e.size == 0:
        raise ValueError("ecdf needs at least one value")
    t, counts = np.unique(e, return_counts=True)
    return t, np.cumsum(counts) / e.size


def ecdf_at(errors, t: float) -> float:
    e = np.asarray(errors, dtype=np.float64).ravel()
    if e.size == 0:
        raise ValueError("ecdf needs at least one value")
    return float(np.count_nonzero(e <= t) / e.size)


CSV_KEYS = ("dataset", "horizon", "method", "seed")


def reports_csv(rows: list[tuple[dict, MetricReport]]) -> str:
    """CSV with one row per report keyed by (dataset, horizon, method, seed)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*CSV_KEYS, "step", "evaluated", "excluded", *ALL_METRICS])
    for key, rep in rows:
        w.writerow([key.get(k, "") for k in CSV_KEYS]
                   + [rep.step, rep.evaluated, rep.excluded]
                   + [repr(rep.values[m]) if m in rep.values else "" for m in ALL_METRICS])
    return buf.getvalue()


def ecdf_csv(errors) -> str:
    t, f = ecdf(errors)
    lines = ["error,ecdf"] + [f"{a!r},{b!r}" for a, b in zip(t.tolist(), f.tolist())]
    return "\n".join(lines) + "\n"
