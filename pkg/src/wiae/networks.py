"""Sliding-window MLPs: causal encoder, causal decoder and Wasserstein critics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import autodiff as ad
from .autodiff import Tensor
from .data import Standardizer
from .errors import DimensionError, InsufficientHistoryError

FORMAT_VERSION = 1
ACTIVATIONS = ("tanh", "linear")


@dataclass(frozen=True)
class MlpSpec:
    input_width: int
    hidden_widths: tuple[int, ...] = (100, 50, 25)
    output_width: int = 1
    hidden_activation: str = "tanh"
    output_activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_width < 1 or self.output_width < 1 or any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"all layer widths must be >= 1: {self}")
        if self.hidden_activation != "tanh":
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation not in ACTIVATIONS:
            raise ValueError(f"unsupported output activation {self.output_activation!r}")

    @property
    def widths(self) -> list[int]:
        return [self.input_width, *self.hidden_widths, self.output_width]

    def parameter_count(self) -> int:
        w = self.widths
        return sum(a * b + b for a, b in zip(w[:-1], w[1:]))


@dataclass(frozen=True, eq=False)
class Mlp:
    """An affine layer stack ``y = act(x @ W + b)``; weights are (fan_in, fan_out)."""

    spec: MlpSpec
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def param_names(self) -> list[str]:
        out = []
        for i in range(len(self.weights)):
            out += [f"layer{i}.weight", f"layer{i}.bias"]
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> "Mlp":
        params = list(params)
        return Mlp(self.spec, tuple(params[0::2]), tuple(params[1::2]))

    def _check_width(self, width: int) -> None:
        if width != self.spec.input_width:
            raise DimensionError(
                f"layer0: expected input width {self.spec.input_width}, got {width}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate on rows of ``x`` without building a graph."""
        h = np.asarray(x, dtype=np.float64)
        self._check_width(h.shape[-1])
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w
            h += b
            if i < last or self.spec.output_activation == "tanh":
                h = np.tanh(h)
        return h

    def forward(self, x: Tensor, params: Sequence[Tensor] | None = None) -> Tensor:
        """Differentiable evaluation; ``params`` overrides the stored weights."""
        self._check_width(x.shape[-1])
        if params is None:
            params = [Tensor(p) for p in self.params()]
        h = x
        last = len(self.weights) - 1
        for i in range(len(self.weights)):
            h = ad.linear(h, params[2 * i], params[2 * i + 1])
            if i < last or self.spec.output_activation == "tanh":
                h = ad.tanh(h)
        return h


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_mlp(spec: MlpSpec, seed: int | np.random.SeedSequence) -> Mlp:
    """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.Philox(ss))
    weights, biases = [], []
    w = spec.widths
    for fan_in, fan_out in zip(w[:-1], w[1:]):
        bound = glorot_bound(fan_in, fan_out)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(spec, tuple(weights), tuple(biases))


def zero_mlp(spec: MlpSpec) -> Mlp:
    w = spec.widths
    return Mlp(spec, tuple(np.zeros((a, b)) for a, b in zip(w[:-1], w[1:])),
               tuple(np.zeros(b) for b in w[1:]))


def encoder_spec(m: int, hidden=(100, 50, 25)) -> MlpSpec:
    return MlpSpec(m, tuple(hidden), 1, "tanh", "tanh")


def decoder_spec(m: int, hidden=(100, 50, 25)) -> MlpSpec:
    return MlpSpec(m, tuple(hidden), 1, "tanh", "linear")


def critic_spec(n: int, hidden=(100, 50, 25)) -> MlpSpec:
    return MlpSpec(n, tuple(hidden), 1, "tanh", "linear")


@dataclass(frozen=True, eq=False)
class WiaeModel:
    encoder: Mlp
    decoder: Mlp
    m: int
    standardizer: Standardizer = field(default_factory=lambda: Standardizer(0.0, 1.0))
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.encoder.spec.input_width != self.m or self.decoder.spec.input_width != self.m:
            raise DimensionError(f"encoder/decoder input width must equal m={self.m}")
        if self.encoder.spec.output_width != 1 or self.decoder.spec.output_width != 1:
            raise DimensionError("encoder and decoder must have output width 1")
        if not self.standardizer.std > 0:
            raise ValueError("standardizer std must be positive")


def init_model(m: int, seed: int, standardizer: Standardizer | None = None,
               hidden=(100, 50, 25)) -> WiaeModel:
    enc_ss, dec_ss = np.random.SeedSequence(seed).spawn(2)
    return WiaeModel(init_mlp(encoder_spec(m, hidden), enc_ss),
                     init_mlp(decoder_spec(m, hidden), dec_ss),
                     m, standardizer or Standardizer(0.0, 1.0))


def causal_windows(series: np.ndarray, m: int) -> np.ndarray:
    """Rows ``(x_t, x_{t-1}, ..., x_{t-m+1})`` for ``t = m-1 .. L-1``."""
    x = np.asarray(series, dtype=np.float64)
    if x.shape[-1] < m:
        raise InsufficientHistoryError(f"need at least m={m} values, got {x.shape[-1]}")
    return sliding_window_view(x, m, axis=-1)[..., ::-1]


def encode_series(model: WiaeModel, series) -> np.ndarray:
    """Innovations for a standardized series; output has length ``L - m + 1``."""
    win = causal_windows(series, model.m)
    return model.encoder(win)[..., 0]


def decode_innovations(model: WiaeModel, innovations) -> np.ndarray:
    """Reconstructions from innovations; output has length ``K - m + 1``."""
    win = causal_windows(innovations, model.m)
    return model.decoder(win)[..., 0]


def critic_score(critic: Mlp, block) -> float | np.ndarray:
    b = np.asarray(block, dtype=np.float64)
    if b.shape[-1] != critic.spec.input_width:
        raise DimensionError(
            f"critic: expected block width {critic.spec.input_width}, got {b.shape[-1]}")
    out = critic(b)[..., 0]
    return float(out) if out.ndim == 0 else out
