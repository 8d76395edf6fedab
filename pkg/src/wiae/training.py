"""Adversarial WIAE training with gradient-penalised Wasserstein critics.

Two critics are trained against the autoencoder:

* the innovation critic separates i.i.d. uniform blocks (real) from blocks
  of encoder outputs (fake);
* the reconstruction critic separates blocks of the series (real) from
  blocks of decoder outputs (fake).

The encoder and decoder minimise ``-E[D_inn(V)] - lam * E[D_rec(X_hat)]``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import SeriesDataset, stream
from .errors import ConfigurationError, ContractError, DimensionError, TrainingError
from .networks import Mlp, WiaeModel, causal_windows, critic_spec, init_mlp, init_model

log = logging.getLogger(__name__)

# Learning rate, (lambda1, lambda2), reconstruction weight per dataset.
PROFILES: dict[str, dict[str, float]] = {
    "MC": dict(learning_rate=1e-4, gp_lambda1=1.0, gp_lambda2=1.0, lambda_reconstruction=1.0),
    "LAR": dict(learning_rate=1e-4, gp_lambda1=1.0, gp_lambda2=1.6, lambda_reconstruction=1.0),
    "MA": dict(learning_rate=1e-4, gp_lambda1=1.0, gp_lambda2=1.6, lambda_reconstruction=1.0),
    "SP500": dict(learning_rate=1e-5, gp_lambda1=1.0, gp_lambda2=1.3, lambda_reconstruction=1.0),
    "NYISO": dict(learning_rate=1e-5, gp_lambda1=1.0, gp_lambda2=1.4, lambda_reconstruction=1.0),
    "ISONE": dict(learning_rate=1e-5, gp_lambda1=1.0, gp_lambda2=1.0, lambda_reconstruction=1.0),
    "PJM": dict(learning_rate=1e-5, gp_lambda1=1.0, gp_lambda2=1.0, lambda_reconstruction=1.0),
    "ELECTRICITY": dict(learning_rate=1e-5, gp_lambda1=1.0, gp_lambda2=1.0,
                        lambda_reconstruction=1.0),
    "TRAFFIC": dict(learning_rate=1e-5, gp_lambda1=1.0, gp_lambda2=1.2, lambda_reconstruction=1.0),
}
PROFILES["AR1"] = PROFILES["LAR"]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    lambda_reconstruction: float = 1.0
    gp_lambda1: float = 1.0
    gp_lambda2: float = 1.0
    m: int = 20
    n: int = 50
    batch_size: int = 60
    epochs: int = 100
    critic_steps_per_generator: int = 5
    seed: int = 0
    hidden_widths: tuple[int, ...] = (100, 50, 25)

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        checks = [
            (self.learning_rate > 0, "learning_rate", "must be > 0"),
            (0 <= self.adam_beta1 < 1, "adam_beta1", "must be in [0, 1)"),
            (0 <= self.adam_beta2 < 1, "adam_beta2", "must be in [0, 1)"),
            (self.adam_epsilon > 0, "adam_epsilon", "must be > 0"),
            (self.lambda_reconstruction >= 0, "lambda_reconstruction", "must be >= 0"),
            (self.gp_lambda1 >= 0, "gp_lambda1", "must be >= 0"),
            (self.gp_lambda2 >= 0, "gp_lambda2", "must be >= 0"),
            (self.m >= 1, "m", "must be >= 1"),
            (self.n >= self.m, "n", "must be >= m"),
            (self.batch_size >= 1, "batch_size", "must be >= 1"),
            (self.epochs >= 0, "epochs", "must be >= 0"),
            (self.critic_steps_per_generator >= 0, "critic_steps_per_generator", "must be >= 0"),
        ]
        for ok, key, msg in checks:
            if not ok:
                raise ConfigurationError(f"{key} {msg} (got {getattr(self, key)!r})")

    @classmethod
    def from_profile(cls, name: str, **overrides) -> "TrainConfig":
        try:
            base = PROFILES[name.upper()]
        except KeyError:
            raise ConfigurationError(f"unknown profile {name!r}") from None
        return cls(**{**base, **overrides})

    @property
    def segment_length(self) -> int:
        return self.n + 2 * (self.m - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_widths"] = list(self.hidden_widths)
        return d


@dataclass
class LossReport:
    epoch: int
    innovation_critic_objective: float
    reconstruction_critic_objective: float
    generator_objective: float
    gradient_penalty_values: tuple[float, float]

    def __post_init__(self):
        vals = [self.innovation_critic_objective, self.reconstruction_critic_objective,
                self.generator_objective, *self.gradient_penalty_values]
        if not all(np.isfinite(vals)):
            raise TrainingError("non-finite loss", epoch=self.epoch)

    @classmethod
    def average(cls, epoch: int, reports: Sequence["LossReport"]) -> "LossReport":
        arr = np.array([[r.innovation_critic_objective, r.reconstruction_critic_objective,
                         r.generator_objective, *r.gradient_penalty_values] for r in reports])
        avg = arr.mean(axis=0)
        return cls(epoch, float(avg[0]), float(avg[1]), float(avg[2]),
                   (float(avg[3]), float(avg[4])))

    CSV_HEADER = ("epoch,innovation_critic_objective,reconstruction_critic_objective,"
                  "generator_objective,gradient_penalty_innovation,gradient_penalty_reconstruction")

    def csv_row(self) -> str:
        vals = [self.innovation_critic_objective, self.reconstruction_critic_objective,
                self.generator_objective, *self.gradient_penalty_values]
        return ",".join([str(self.epoch)] + [repr(float(v)) for v in vals])


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


# -- objectives -------------------------------------------------------------

def _critic_params(critic: Mlp, track: bool) -> list[Tensor]:
    return [Tensor(p, requires_grad=track) for p in critic.params()]


def _scores(critic: Mlp, blocks: Tensor, params: Sequence[Tensor] | None) -> Tensor:
    if blocks.ndim != 2 or blocks.shape[0] == 0:
        raise ContractError(f"critic batch must be a non-empty 2-d array, got {blocks.shape}")
    if blocks.shape[1] != critic.spec.input_width:
        raise DimensionError(
            f"critic: block width {blocks.shape[1]} != {critic.spec.input_width}")
    return critic.forward(blocks, params)


def wasserstein_objective(critic: Mlp, real_blocks, fake_blocks,
                          params: Sequence[Tensor] | None = None) -> Tensor:
    """Mean critic score on ``real_blocks`` minus mean score on ``fake_blocks``."""
    real = ad.as_tensor(real_blocks)
    fake = ad.as_tensor(fake_blocks)
    return ad.sub(ad.mean(_scores(critic, real, params)), ad.mean(_scores(critic, fake, params)))


def gradient_penalty(critic: Mlp, real, fake, lambda_gp: float, rng: np.random.Generator,
                     params: Sequence[Tensor] | None = None) -> Tensor:
    """``lambda_gp * mean_i (||grad D(x_i)|| - 1)^2`` at random interpolates.

    ``x_i = eps_i * real_i + (1 - eps_i) * fake_i`` with ``eps_i ~ U[0, 1]``.
    """
    real = ad.as_tensor(real).detach()
    fake = ad.as_tensor(fake).detach()
    if real.shape != fake.shape:
        raise DimensionError(f"gradient penalty: real {real.shape} vs fake {fake.shape}")
    eps = rng.random((real.shape[0], 1))
    x = Tensor(eps * real.data + (1.0 - eps) * fake.data, requires_grad=True)
    total = ad.tsum(_scores(critic, x, params))
    norms = ad.row_gradient_norms(total, x)
    return ad.mul(ad.mean(ad.square(ad.sub(norms, 1.0))), float(lambda_gp))


def adam_update(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
                config: TrainConfig, names: Sequence[str] | None = None,
                epoch: int | None = None) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam step; returns new parameter arrays and state."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionError("adam: parameter, gradient and state lists differ in length")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise DimensionError(f"adam: shape mismatch for parameter {i}")
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient", epoch=epoch,
                                parameter=names[i] if names else str(i))
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    step = state.step + 1
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_params.append(p - config.learning_rate * (m / c1) / (np.sqrt(v / c2) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v, step)


# -- one optimisation step ------------------------------------------------

class _SegmentGeometry:
    """Index bookkeeping for segments of length ``n + 2(m - 1)``.

    Each segment yields ``n + m - 1`` innovations and ``n`` reconstructions
    aligned with the last ``n`` samples of the segment.
    """

    def __init__(self, m: int, n: int):
        self.m, self.n = m, n
        self.length = n + 2 * (m - 1)
        self.n_innov = n + m - 1
        # Decoder windows as a 0/1 matrix: (B, n_innov) @ S -> (B, n * m), block
        # row j holds (v_j, v_{j-1}, ..., v_{j-m+1}) for the j-th reconstruction.
        sel = np.zeros((self.n_innov, n * m))
        for j in range(n):
            for k in range(m):
                sel[j + m - 1 - k, j * m + k] = 1.0
        self.select = Tensor(sel)


def _blocks_newest_first(x: np.ndarray | Tensor, n: int):
    """Last ``n`` columns of ``x`` reversed so column 0 is the newest value."""
    idx = np.arange(x.shape[1] - 1, x.shape[1] - 1 - n, -1)
    if isinstance(x, Tensor):
        return ad.getitem(x, (slice(None), idx))
    return x[:, idx]


@dataclass
class TrainState:
    model: WiaeModel
    innovation_critic: Mlp
    reconstruction_critic: Mlp
    gen_state: AdamState
    inn_state: AdamState
    rec_state: AdamState
    rng: np.random.Generator
    geometry: _SegmentGeometry = field(repr=False, default=None)

    @classmethod
    def initial(cls, model: WiaeModel, config: TrainConfig,
                critics: tuple[Mlp, Mlp] | None = None) -> "TrainState":
        if critics is None:
            s1, s2 = np.random.SeedSequence(config.seed, spawn_key=(1,)).spawn(2)
            spec = critic_spec(config.n, config.hidden_widths)
            critics = (init_mlp(spec, s1), init_mlp(spec, s2))
        gen_params = model.encoder.params() + model.decoder.params()
        return cls(model, critics[0], critics[1], AdamState.zeros_like(gen_params),
                   AdamState.zeros_like(critics[0].params()),
                   AdamState.zeros_like(critics[1].params()),
                   stream(config.seed, 2), _SegmentGeometry(config.m, config.n))


def _critic_step(critic: Mlp, state: AdamState, real: np.ndarray, fake: np.ndarray,
                 lambda_gp: float, config: TrainConfig, rng: np.random.Generator,
                 epoch: int) -> tuple[Mlp, AdamState, float, float]:
    params = _critic_params(critic, True)
    objective = wasserstein_objective(critic, real, fake, params)
    penalty = gradient_penalty(critic, real, fake, lambda_gp, rng, params)
    loss = ad.add(ad.neg(objective), penalty)
    if not np.isfinite(loss.data):
        raise TrainingError("non-finite critic loss", epoch=epoch)
    grads = [g.data for g in ad.grad(loss, params)]
    new, state = adam_update(critic.params(), grads, state, config, critic.param_names(), epoch)
    return critic.with_params(new), state, float(objective.data), float(penalty.data)


def train_step(ts: TrainState, segments: np.ndarray, config: TrainConfig,
               epoch: int = 0, return_grads: bool = False):
    """Critic ascent steps on both critics, then one autoencoder descent step.

    ``segments`` holds standardized raw windows, one per row, each of length
    ``n + 2(m - 1)``.  Returns a :class:`LossReport` (and the autoencoder
    gradients when ``return_grads``).
    """
    geo = ts.geometry
    segments = np.asarray(segments, dtype=np.float64)
    if segments.ndim != 2 or segments.shape[1] != geo.length or segments.shape[0] < 1:
        raise ContractError(
            f"segments must have shape (batch, {geo.length}), got {segments.shape}")
    model = ts.model
    m, n, batch = config.m, config.n, segments.shape[0]

    enc_params = [Tensor(p, requires_grad=True) for p in model.encoder.params()]
    dec_params = [Tensor(p, requires_grad=True) for p in model.decoder.params()]
    enc_in = Tensor(causal_windows(segments, m).reshape(-1, m))
    innov = ad.reshape(model.encoder.forward(enc_in, enc_params), (batch, geo.n_innov))
    dec_in = ad.reshape(ad.matmul(innov, geo.select), (batch * n, m))
    recon = ad.reshape(model.decoder.forward(dec_in, dec_params), (batch, n))
    # Reconstructions are produced oldest-first; flip to the block convention.
    recon_blocks = ad.getitem(recon, (slice(None), np.arange(n - 1, -1, -1)))
    innov_blocks = _blocks_newest_first(innov, n)
    orig_blocks = _blocks_newest_first(segments, n)

    fake_inn = innov_blocks.data
    fake_rec = recon_blocks.data
    inn_obj = rec_obj = 0.0
    gp_inn = gp_rec = 0.0
    for _ in range(config.critic_steps_per_generator):
        uniform = ts.rng.uniform(-1.0, 1.0, size=(batch, n))
        ts.innovation_critic, ts.inn_state, inn_obj, gp_inn = _critic_step(
            ts.innovation_critic, ts.inn_state, uniform, fake_inn, config.gp_lambda1,
            config, ts.rng, epoch)
        ts.reconstruction_critic, ts.rec_state, rec_obj, gp_rec = _critic_step(
            ts.reconstruction_critic, ts.rec_state, orig_blocks, fake_rec, config.gp_lambda2,
            config, ts.rng, epoch)

    inn_scores = ts.innovation_critic.forward(innov_blocks)
    gen_loss = ad.neg(ad.mean(inn_scores))
    if config.lambda_reconstruction != 0.0:
        rec_scores = ts.reconstruction_critic.forward(recon_blocks)
        gen_loss = ad.sub(gen_loss, ad.mul(ad.mean(rec_scores), config.lambda_reconstruction))
    if not np.isfinite(gen_loss.data):
        raise TrainingError("non-finite generator loss", epoch=epoch)
    grads = [g.data for g in ad.grad(gen_loss, enc_params + dec_params)]
    names = ([f"encoder.{s}" for s in model.encoder.param_names()]
             + [f"decoder.{s}" for s in model.decoder.param_names()])
    new, ts.gen_state = adam_update(model.encoder.params() + model.decoder.params(), grads,
                                    ts.gen_state, config, names, epoch)
    k = len(enc_params)
    ts.model = replace(model, encoder=model.encoder.with_params(new[:k]),
                       decoder=model.decoder.with_params(new[k:]))
    report = LossReport(epoch, inn_obj, rec_obj, float(gen_loss.data), (gp_inn, gp_rec))
    if return_grads:
        return report, grads
    return report


def sample_segments(series: np.ndarray, starts: np.ndarray, length: int) -> np.ndarray:
    idx = starts[:, None] + np.arange(length)[None, :]
    return series[idx]


def train(dataset: SeriesDataset, config: TrainConfig,
          callback: Callable[[int, TrainState, LossReport], None] | None = None,
          ) -> tuple[WiaeModel, list[LossReport]]:
    """Train a WIAE on the training split of ``dataset``.

    Each epoch runs ``num_segments // batch_size`` steps; every step draws
    ``batch_size`` segment starts uniformly with replacement.  Results are a
    deterministic function of ``(dataset, config)``.
    """
    z = dataset.standardizer.apply(dataset.train)
    seg_len = config.segment_length
    need = seg_len + config.batch_size
    if z.size < need:
        raise ConfigurationError(
            f"training split has {z.size} samples; need at least n + 2(m-1) + batch_size = {need}")
    model = init_model(config.m, config.seed, dataset.standardizer, config.hidden_widths)
    ts = TrainState.initial(model, config)
    num_segments = z.size - seg_len + 1
    steps = max(1, num_segments // config.batch_size)
    sampler = stream(config.seed, 3)
    history: list[LossReport] = []
    for epoch in range(config.epochs):
        reports = []
        for _ in range(steps):
            starts = sampler.integers(0, num_segments, size=config.batch_size)
            reports.append(train_step(ts, sample_segments(z, starts, seg_len), config, epoch))
        summary = LossReport.average(epoch, reports)
        history.append(summary)
        log.info("epoch %d: inn=%.4f rec=%.4f gen=%.4f", epoch,
                 summary.innovation_critic_objective, summary.reconstruction_critic_objective,
                 summary.generator_objective)
        if callback is not None:
            callback(epoch, ts, summary)
    return ts.model, history


def parameter_count(model: WiaeModel) -> tuple[int, int]:
    return (sum(p.size for p in model.encoder.params()),
            sum(p.size for p in model.decoder.params()))
