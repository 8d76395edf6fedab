import numpy as np
import pytest
from scipy.stats import ks_2samp

from wiae.data import Standardizer
from wiae.errors import InsufficientHistoryError
from wiae.forecasting import (ForecastRequest, decode_futures, forecast, history_needed,
                              innovation_history, point_estimates_of, rolling_forecasts,
                              sample_trajectories)
from wiae.networks import Mlp, MlpSpec, WiaeModel, encode_series, init_model


def passthrough_model(m=3, mean=0.0, std=1.0):
    """Linear model whose decoder returns the newest innovation."""
    enc = MlpSpec(m, (), 1, "tanh", "linear")
    w = np.zeros((m, 1))
    w[0, 0] = 1.0
    mlp = Mlp(enc, (w,), (np.zeros(1),))
    return WiaeModel(mlp, mlp, m, Standardizer(mean, std))


def test_request_validation():
    with pytest.raises(ValueError):
        ForecastRequest(10, horizon=0)
    with pytest.raises(ValueError):
        ForecastRequest(10, num_trajectories=0)


def test_innovation_history_causal(rng):
    model = init_model(4, 1, hidden=(5,))
    x = rng.normal(size=20)
    assert innovation_history(model, x[:4]).shape == (1,)
    a = innovation_history(model, x[:15])
    b = innovation_history(model, x[:16])
    np.testing.assert_array_equal(b[:-1], a)
    np.testing.assert_array_equal(a, encode_series(model, model.standardizer.apply(x[:15])))
    with pytest.raises(InsufficientHistoryError):
        innovation_history(model, x[:3])


def test_passthrough_decoder_gives_uniform_samples():
    model = passthrough_model(mean=10.0, std=2.0)
    dist = sample_trajectories(model, np.zeros(5), ForecastRequest(0, 3, 4000, seed=1))
    assert dist.samples.shape == (4000, 3)
    assert dist.samples.min() >= 8.0 and dist.samples.max() <= 12.0
    assert abs(dist.samples.mean() - 10.0) < 0.05


def test_decode_window_layout():
    m = 3
    w = np.array([[1.0], [10.0], [100.0]])  # decoder reads newest*1 + next*10 + ...
    spec = MlpSpec(m, (), 1, "tanh", "linear")
    mlp = Mlp(spec, (w,), (np.zeros(1),))
    model = WiaeModel(mlp, mlp, m)
    out = decode_futures(model, np.array([0.5, 0.7]), np.array([[0.1, 0.2]]))
    # step 1 window (u1, v_t, v_{t-1}) = (0.1, 0.7, 0.5); step 2 (u2, u1, v_t)
    np.testing.assert_allclose(out, [[0.1 + 7 + 50, 0.2 + 1 + 70]])


def test_point_estimates():
    mean, med = point_estimates_of(np.array([[0.0], [1.0], [1.0], [2.0]]))
    assert mean[0] == 1.0 and med[0] == 1.0
    assert point_estimates_of(np.array([[0.0], [2.0]]))[1][0] == 1.0


def test_forecast_deterministic_and_seed_independent(rng):
    model = init_model(4, 2, hidden=(6,))
    x = rng.normal(size=30)
    a = forecast(model, x, ForecastRequest(20, 2, 3000, seed=5))
    b = forecast(model, x, ForecastRequest(20, 2, 3000, seed=5))
    c = forecast(model, x, ForecastRequest(20, 2, 3000, seed=6))
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.isnan(a.samples).any()
    assert ks_2samp(a.samples[:, 0], c.samples[:, 0]).pvalue > 0.01
    np.testing.assert_allclose(a.mean, a.samples.mean(axis=0))


def test_forecast_history_check():
    model = init_model(4, 2, hidden=(6,))
    assert history_needed(model) == 6
    with pytest.raises(InsufficientHistoryError):
        forecast(model, np.zeros(30), ForecastRequest(4))


def test_rolling_matches_single_origin(rng):
    model = init_model(4, 2, hidden=(6,))
    x = rng.normal(size=40)
    roll = rolling_forecasts(model, x, [10, 20], 3, 50, seed=1)
    again = rolling_forecasts(model, x, [20], 3, 50, seed=1)
    np.testing.assert_array_equal(roll[1], again[0])
    # same decoder inputs as the single-origin path
    hist = innovation_history(model, x[:21])
    from wiae.data import stream
    fut = stream(1, 20).uniform(-1, 1, size=(50, 3))
    ref = sample_trajectories(model, hist, ForecastRequest(20, 3, 50), futures=fut)
    np.testing.assert_allclose(roll[1], ref.samples, rtol=1e-13)
