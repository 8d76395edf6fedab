"""Run configuration: one JSON document per experiment.

Sections are ``dataset``, ``train``, ``forecast`` and ``evaluate``; keys not
listed here are rejected, absent keys take the defaults below.  Relative
paths resolve against the directory holding the config file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .data import DEFAULT_BURN_IN, GeneratorSpec
from .errors import ConfigError, ConfigurationError
from .networks import FORMAT_VERSION
from .training import PROFILES, TrainConfig

OUTPUT_DIR_ENV = "WIAE_OUTPUT_DIR"


@dataclass(frozen=True)
class DatasetConfig:
    generator: GeneratorSpec | None = None
    csv: Path | None = None
    train_end: int | None = None

    def describe(self) -> dict:
        """Location-independent identity: generator spec or CSV content digest."""
        if self.generator is not None:
            g = self.generator
            return {"generator": {"kind": g.kind, "length": g.length, "seed": g.seed,
                                  "burn_in": g.burn_in}, "train_end": self.train_end}
        digest = hashlib.sha256(self.csv.read_bytes()).hexdigest()
        return {"csv_sha256": digest, "train_end": self.train_end}


@dataclass(frozen=True)
class ForecastConfig:
    horizon: int = 1
    num_trajectories: int = 1000
    seed: int = 0
    origin: int = -1  # -1: the last observation


@dataclass(frozen=True)
class EvaluateConfig:
    origin_stride: int = 1
    max_origins: int | None = None
    outlier_basis: str = "truth"
    method: str = "GPF-WI"


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig
    train: TrainConfig = field(default_factory=TrainConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    profile: str | None = None
    output_dir: Path = Path("wiae-out")
    format_version: int = FORMAT_VERSION

    def canonical(self) -> dict:
        return {
            "format_version": self.format_version,
            "profile": self.profile,
            "dataset": self.dataset.describe(),
            "train": self.train.to_dict(),
            "forecast": _plain(self.forecast),
            "evaluate": _plain(self.evaluate),
        }

    def hash(self) -> str:
        """SHA-256 of the canonical config; the output directory is excluded."""
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _plain(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


TOP_KEYS = {"format_version", "profile", "dataset", "train", "forecast", "evaluate", "output_dir"}
DATASET_KEYS = {"generator", "csv", "train_end"}
GENERATOR_KEYS = {"kind", "length", "seed", "burn_in"}


def _typed(value: Any, kind, key: str, *, optional: bool = False):
    if value is None and optional:
        return None
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool) and kind is not bool or not isinstance(value, kind):
        raise ConfigError(key, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _section(doc: Any, key: str, allowed: set[str]) -> dict:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(key, "expected an object")
    for k in sorted(doc):
        if k not in allowed:
            raise ConfigError(f"{key}.{k}" if key else k, "unknown key")
    return doc


def _resolve(path: str, base: Path, key: str) -> Path:
    p = Path(path)
    if not p.is_absolute():
        p = base / p
    if not p.is_file():
        raise ConfigError(key, f"file not found: {p}")
    return p


def _dataset(doc: Any, base: Path) -> DatasetConfig:
    if isinstance(doc, str):
        doc = {"csv": doc}
    doc = _section(doc, "dataset", DATASET_KEYS)
    if ("generator" in doc) == ("csv" in doc):
        raise ConfigError("dataset", "give exactly one of 'generator' or 'csv'")
    train_end = _typed(doc.get("train_end"), int, "dataset.train_end", optional=True)
    if train_end is not None and train_end < 1:
        raise ConfigError("dataset.train_end", "must be >= 1")
    if "csv" in doc:
        path = _resolve(_typed(doc["csv"], str, "dataset.csv"), base, "dataset.csv")
        return DatasetConfig(csv=path, train_end=train_end)
    g = _section(doc["generator"], "dataset.generator", GENERATOR_KEYS)
    for k in ("kind", "length"):
        if k not in g:
            raise ConfigError(f"dataset.generator.{k}", "missing")
    try:
        spec = GeneratorSpec(_typed(g["kind"], str, "dataset.generator.kind"),
                             _typed(g["length"], int, "dataset.generator.length"),
                             _typed(g.get("seed", 0), int, "dataset.generator.seed"),
                             _typed(g.get("burn_in", DEFAULT_BURN_IN), int,
                                    "dataset.generator.burn_in"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("dataset.generator", str(exc)) from None
    return DatasetConfig(generator=spec, train_end=train_end)


def _train(doc: Any, profile: str | None) -> TrainConfig:
    allowed = {f.name for f in fields(TrainConfig)}
    doc = _section(doc, "train", allowed)
    kinds = {f.name: type(getattr(TrainConfig(), f.name)) for f in fields(TrainConfig)}
    values = {}
    for k, v in doc.items():
        if k == "hidden_widths":
            if not isinstance(v, list) or not all(isinstance(w, int) and not isinstance(w, bool)
                                                  for w in v):
                raise ConfigError("train.hidden_widths", "expected a list of integers")
            values[k] = tuple(v)
        else:
            values[k] = _typed(v, kinds[k], f"train.{k}")
    try:
        if profile is not None:
            return TrainConfig.from_profile(profile, **values)
        return TrainConfig(**values)
    except ConfigurationError as exc:
        key = str(exc).split(" ", 1)[0]
        raise ConfigError(f"train.{key}" if key in allowed else "profile", str(exc)) from None


def _forecast(doc: Any) -> ForecastConfig:
    doc = _section(doc, "forecast", {f.name for f in fields(ForecastConfig)})
    cfg = ForecastConfig(**{k: _typed(v, int, f"forecast.{k}") for k, v in doc.items()})
    if cfg.horizon < 1:
        raise ConfigError("forecast.horizon", "must be >= 1")
    if cfg.num_trajectories < 1:
        raise ConfigError("forecast.num_trajectories", "must be >= 1")
    return cfg


def _evaluate(doc: Any) -> EvaluateConfig:
    doc = _section(doc, "evaluate", {f.name for f in fields(EvaluateConfig)})
    kinds = {"origin_stride": int, "max_origins": int, "outlier_basis": str, "method": str}
    cfg = EvaluateConfig(**{k: _typed(v, kinds[k], f"evaluate.{k}", optional=k == "max_origins")
                            for k, v in doc.items()})
    if cfg.origin_stride < 1:
        raise ConfigError("evaluate.origin_stride", "must be >= 1")
    if cfg.max_origins is not None and cfg.max_origins < 1:
        raise ConfigError("evaluate.max_origins", "must be >= 1")
    if cfg.outlier_basis not in ("truth", "error"):
        raise ConfigError("evaluate.outlier_basis", "must be 'truth' or 'error'")
    return cfg


def config_from_dict(doc: Any, base: Path = Path(".")) -> RunConfig:
    doc = _section(doc, "", TOP_KEYS)
    if "dataset" not in doc:
        raise ConfigError("dataset", "missing")
    version = _typed(doc.get("format_version", FORMAT_VERSION), int, "format_version")
    if version != FORMAT_VERSION:
        raise ConfigError("format_version",
                          f"unsupported version {version}; expected {FORMAT_VERSION}")
    profile = _typed(doc.get("profile"), str, "profile", optional=True)
    if profile is not None and profile.upper() not in PROFILES:
        raise ConfigError("profile", f"unknown profile {profile!r}")
    out = Path(_typed(doc.get("output_dir", "wiae-out"), str, "output_dir"))
    return RunConfig(
        dataset=_dataset(doc["dataset"], base),
        train=_train(doc.get("train"), profile),
        forecast=_forecast(doc.get("forecast")),
        evaluate=_evaluate(doc.get("evaluate")),
        profile=profile.upper() if profile else None,
        output_dir=out if out.is_absolute() else base / out,
        format_version=version,
    )


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("path", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("document", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(doc, path.parent)


def apply_overrides(doc: dict, assignments: list[str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as JSON when possible."""
    doc = json.loads(json.dumps(doc))
    for item in assignments:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(item, "override must look like section.key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(key, f"{p!r} is not a section")
            node = nxt
        node[parts[-1]] = value
    return doc


def with_output_dir(cfg: RunConfig, out: Path) -> RunConfig:
    return replace(cfg, output_dir=out)
