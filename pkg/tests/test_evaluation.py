import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wiae.errors import UndefinedMetricError
from wiae.evaluation import (crps, crps_mean, ecdf, ecdf_at, ecdf_csv, evaluate_samples,
                             filter_outliers, mase, nmae, nmse, point_metrics, reports_csv,
                             smape)

pos = st.floats(0.1, 100.0)


def test_hand_cases():
    r = point_metrics([1.0, 2.0], [0.0, 0.0])
    assert r["NMSE"] == 1.0 and r["NMAE"] == 1.0 and r["sMAPE"] == 2.0
    r = point_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r["NMSE"] == r["NMAE"] == r["sMAPE"] == r["MASE"] == 0.0
    assert mase([1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 2.0, 3.0], 1) == 1.0


def test_undefined_metrics():
    with pytest.raises(UndefinedMetricError, match="NMSE"):
        nmse([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(UndefinedMetricError, match="MASE"):
        mase([2.0, 2.0, 2.0], [1.0, 1.0, 1.0], 1)
    with pytest.raises(UndefinedMetricError, match="MASE"):
        mase([1.0, 2.0], [1.0, 1.0], 2)


def test_smape_zero_pair_contributes_zero():
    assert smape([0.0, 1.0], [0.0, 1.0]) == 0.0


def test_crps_hand_cases():
    assert crps([0.0, 1.0], 0.0) == 0.25
    assert crps([0.0, 1.0], 0.5) == 0.25
    assert crps([3.0, 3.0, 3.0], 3.0) == 0.0
    assert crps([2.0], -1.5) == 3.5


@given(arrays(np.float64, st.integers(2, 30), elements=st.floats(-50, 50)),
       st.floats(-50, 50))
def test_crps_matches_pair_enumeration(x, y):
    ref = np.mean(np.abs(x - y)) - 0.5 * np.mean(np.abs(x[:, None] - x[None, :]))
    assert crps(x, y) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@given(arrays(np.float64, 10, elements=pos), arrays(np.float64, 10, elements=pos), pos)
def test_scale_invariance(x, f, c):
    a = point_metrics(x + np.arange(10), f)
    b = point_metrics(c * (x + np.arange(10)), c * f)
    for k in ("NMSE", "NMAE", "sMAPE", "MASE"):
        assert b[k] == pytest.approx(a[k], rel=1e-9)
    assert crps(c * f, c * x[0]) == pytest.approx(c * crps(f, x[0]), rel=1e-9, abs=1e-12)


@given(arrays(np.float64, 8, elements=st.floats(-10, 10)),
       arrays(np.float64, 8, elements=st.floats(-10, 10)))
def test_smape_bounds(x, f):
    assert 0.0 <= smape(x, f) <= 2.0


def test_outlier_rules():
    x = np.zeros(10)
    x[-1] = 100.0
    kept, _, excluded = filter_outliers(x)
    assert excluded == 0 and kept.size == 10
    _, _, excluded = filter_outliers(np.ones(5))
    assert excluded == 0
    y = np.r_[np.tile([-1.0, 1.0], 50), 10.0]
    kept, (comp,), excluded = filter_outliers(y, np.arange(101))
    assert excluded == 1 and 100 not in comp
    _, _, excluded = filter_outliers(y, basis="error", forecast=y)
    assert excluded == 0


def test_ecdf():
    t, f = ecdf([3.0, 1.0, 2.0, 2.0])
    np.testing.assert_array_equal(t, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(f, [0.25, 0.75, 1.0])
    assert ecdf_at([1, 2, 3], 2) == 2 / 3
    assert ecdf_at([1, 2, 3], 0.5) == 0.0 and ecdf_at([1, 2, 3], 9) == 1.0
    assert ecdf_csv([1.0]).splitlines() == ["error,ecdf", "1.0,1.0"]


def test_evaluate_samples_uses_mean_and_median(rng):
    truth = rng.normal(size=40) + 3
    samples = truth[:, None] + rng.normal(size=(40, 101))
    rep = evaluate_samples(truth, samples)
    mean, med = samples.mean(1), np.median(samples, 1)
    assert rep["NMSE"] == pytest.approx(nmse(truth, mean), rel=1e-12)
    assert rep["NMAE"] == pytest.approx(nmae(truth, med), rel=1e-12)
    assert rep["CRPS"] == pytest.approx(crps_mean(samples, truth), rel=1e-12)
    assert rep.total == 40


def test_report_serialization():
    rep = point_metrics([1.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    text = rep.to_text()
    assert "NMSE=" in text and "evaluated=3" in text
    csv_text = reports_csv([({"dataset": "LAR", "horizon": 1, "method": "m", "seed": 0}, rep)])
    assert csv_text.splitlines()[0].startswith("dataset,horizon,method,seed")
