import numpy as np
import pytest

from wiae import autodiff as ad
from wiae.autodiff import Tensor
from wiae.data import GeneratorSpec, gen_lar, stream
from wiae.errors import ConfigurationError, TrainingError
from wiae.networks import critic_spec, init_mlp, init_model
from wiae.training import (AdamState, LossReport, TrainConfig, TrainState, adam_update,
                           gradient_penalty, parameter_count, sample_segments, train, train_step,
                           wasserstein_objective)

TINY = dict(m=3, n=6, batch_size=8, hidden_widths=(6, 4), critic_steps_per_generator=2)


def test_profiles():
    c = TrainConfig.from_profile("ISONE")
    assert (c.learning_rate, c.gp_lambda1, c.gp_lambda2, c.lambda_reconstruction) == (
        1e-5, 1.0, 1.0, 1.0)
    c = TrainConfig.from_profile("LAR")
    assert (c.learning_rate, c.gp_lambda1, c.gp_lambda2) == (1e-4, 1.0, 1.6)
    assert TrainConfig.from_profile("nyiso").gp_lambda2 == 1.4
    with pytest.raises(ConfigurationError):
        TrainConfig.from_profile("nope")


def test_config_validation():
    with pytest.raises(ConfigurationError, match="epochs"):
        TrainConfig(epochs=-1)
    with pytest.raises(ConfigurationError):
        TrainConfig(m=20, n=10)
    assert TrainConfig().segment_length == 88


def test_objective_zero_on_identical_batches(rng):
    critic = init_mlp(critic_spec(5), 1)
    x = rng.normal(size=(7, 5))
    assert wasserstein_objective(critic, x, x).item() == 0.0


def test_gradient_penalty_finite_difference(rng):
    critic = init_mlp(critic_spec(4, (5, 3)), 3)
    real, fake = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
    params = [Tensor(p, requires_grad=True) for p in critic.params()]
    gp = gradient_penalty(critic, real, fake, 1.3, stream(0, 9), params)
    grads = ad.grad(gp, params)

    def value(flat):
        return gradient_penalty(critic.with_params(flat), real, fake, 1.3, stream(0, 9)).item()

    flat = critic.params()
    i = 2
    num = np.zeros_like(flat[i])
    for idx in np.ndindex(flat[i].shape):
        q = [a.copy() for a in flat]
        q[i][idx] += 1e-6
        up = value(q)
        q[i][idx] -= 2e-6
        num[idx] = (up - value(q)) / 2e-6
    np.testing.assert_allclose(grads[i].data, num, rtol=1e-5, atol=1e-9)


def test_adam_first_step_is_learning_rate_sized():
    cfg = TrainConfig(learning_rate=0.01)
    p = [np.array([1.0, -2.0])]
    new, st = adam_update(p, [np.array([0.3, -5.0])], AdamState.zeros_like(p), cfg)
    np.testing.assert_allclose(new[0], [0.99, -1.99], rtol=1e-6)
    assert st.step == 1


def test_adam_rejects_non_finite():
    p = [np.zeros(2)]
    with pytest.raises(TrainingError) as exc:
        adam_update(p, [np.array([np.nan, 0.0])], AdamState.zeros_like(p), TrainConfig(),
                    ["enc.w"], epoch=3)
    assert exc.value.epoch == 3 and exc.value.parameter == "enc.w"


def test_loss_report_rejects_nan():
    with pytest.raises(TrainingError):
        LossReport(0, np.nan, 0.0, 0.0, (0.0, 0.0))


def test_generator_gradient_finite_difference(rng):
    cfg = TrainConfig(**{**TINY, "critic_steps_per_generator": 0})
    model = init_model(cfg.m, 0, hidden=cfg.hidden_widths)
    segs = rng.normal(size=(4, cfg.segment_length))

    def loss(flat):
        k = len(model.encoder.params())
        m2 = type(model)(model.encoder.with_params(flat[:k]), model.decoder.with_params(flat[k:]),
                         model.m, model.standardizer)
        ts = TrainState.initial(m2, cfg)
        return train_step(ts, segs, cfg).generator_objective

    ts = TrainState.initial(model, cfg)
    _, grads = train_step(ts, segs, cfg, return_grads=True)
    flat = model.encoder.params() + model.decoder.params()
    for i in (0, len(model.encoder.params())):
        num = np.zeros_like(flat[i])
        for idx in list(np.ndindex(flat[i].shape))[:6]:
            q = [a.copy() for a in flat]
            q[i][idx] += 1e-6
            up = loss(q)
            q[i][idx] -= 2e-6
            num[idx] = (up - loss(q)) / 2e-6
            assert grads[i][idx] == pytest.approx(num[idx], rel=1e-5, abs=1e-9)


def test_sample_segments():
    s = sample_segments(np.arange(10.0), np.array([0, 3]), 4)
    np.testing.assert_array_equal(s, [[0, 1, 2, 3], [3, 4, 5, 6]])


def test_train_deterministic_and_zero_epochs():
    ds = gen_lar(GeneratorSpec("LAR", 300, 1))
    cfg = TrainConfig(**TINY, epochs=2, seed=4)
    a, hist = train(ds, cfg)
    b, _ = train(ds, cfg)
    assert len(hist) == 2
    for x, y in zip(a.encoder.params() + a.decoder.params(),
                    b.encoder.params() + b.decoder.params()):
        np.testing.assert_array_equal(x, y)
    init = init_model(cfg.m, cfg.seed, ds.standardizer, cfg.hidden_widths)
    z, hist0 = train(ds, TrainConfig(**TINY, epochs=0, seed=4))
    assert hist0 == []
    for x, y in zip(z.encoder.params(), init.encoder.params()):
        np.testing.assert_array_equal(x, y)


def test_train_rejects_short_series():
    ds = gen_lar(GeneratorSpec("LAR", 20, 1))  # 16 train < 10 + 8
    with pytest.raises(ConfigurationError):
        train(ds, TrainConfig(**TINY, epochs=1))


def test_parameter_count():
    assert parameter_count(init_model(20, 0)) == (8451, 8451)
