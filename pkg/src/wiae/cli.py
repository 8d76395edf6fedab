"""``wiae`` command line: generate, train, extract, forecast, evaluate, runstest.

Every command reads one JSON run config (``--config``); flags and ``--set
section.key=value`` override its keys.  Artifacts go to the configured output
directory, which ``$WIAE_OUTPUT_DIR`` and ``--output-dir`` override in turn.
Each artifact records the config hash, and nothing depends on wall-clock
time, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import traceback
from datetime import timedelta
from pathlib import Path

import numpy as np

from . import __version__
from .config import OUTPUT_DIR_ENV, RunConfig, apply_overrides, config_from_dict
from .data import SeriesDataset, generate, load_csv, series_csv_text
from .errors import ConfigError, WiaeError
from .evaluation import ecdf_csv, metrics_from_summaries, reports_csv, summarize_samples
from .forecasting import ForecastRequest, forecast, history_needed, rolling_forecasts
from .networks import WiaeModel, encode_series
from .persistence import load_model, save_model
from .stats import runs_test, uniform_quantiles, wasserstein_1d
from .training import LossReport, train

log = logging.getLogger("wiae")

COMMANDS = ("generate", "train", "extract", "forecast", "evaluate", "runstest")
ORIGIN_CHUNK = 64


# -- helpers -----------------------------------------------------------------

def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"wiae {__version__} {command}", f"config_hash={cfg.hash()}"]


def _comments(cfg: RunConfig, command: str) -> str:
    return "".join(f"# {line}\n" for line in _header(cfg, command))


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _dataset(cfg: RunConfig) -> SeriesDataset:
    d = cfg.dataset
    if d.generator is not None:
        ds = generate(d.generator)
    else:
        ds = load_csv(d.csv)
    return ds.with_split(d.train_end) if d.train_end is not None else ds


def _model(cfg: RunConfig, path: str | None) -> WiaeModel:
    return load_model(Path(path) if path else cfg.output_dir / "model.json")


def _rows_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _floats(values) -> list[str]:
    return [repr(float(v)) for v in values]


def _kv(pairs: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs.items())


def _innovations(model: WiaeModel, ds: SeriesDataset) -> tuple[np.ndarray, int]:
    """Innovations of the whole series and the series index of the first one."""
    return encode_series(model, ds.standardized()), model.m - 1


# -- commands ----------------------------------------------------------------

def cmd_generate(cfg: RunConfig, args) -> list[Path]:
    if cfg.dataset.generator is None:
        raise ConfigError("dataset.generator", "generate needs a generator dataset")
    ds = _dataset(cfg)
    g = cfg.dataset.generator
    comments = _header(cfg, "generate") + [
        f"generator kind={g.kind} length={g.length} seed={g.seed} burn_in={g.burn_in}"]
    return [_write(cfg.output_dir / "series.csv",
                   series_csv_text(ds.values, ds.period_seconds, ds.start, comments))]


def cmd_train(cfg: RunConfig, args) -> list[Path]:
    ds = _dataset(cfg)
    model, history = train(ds, cfg.train)
    out = cfg.output_dir
    model_path = out / "model.json"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path, {"config_hash": cfg.hash(), "epochs": cfg.train.epochs})
    lines = [LossReport.CSV_HEADER] + [r.csv_row() for r in history]
    loss_path = _write(out / "loss_history.csv", _comments(cfg, "train") + "\n".join(lines) + "\n")
    return [model_path, loss_path]


def cmd_extract(cfg: RunConfig, args) -> list[Path]:
    ds = _dataset(cfg)
    model = _model(cfg, args.model)
    innov, first = _innovations(model, ds)
    step = timedelta(seconds=ds.period_seconds)
    rows = [[(ds.start + (first + i) * step).isoformat(), repr(float(v))]
            for i, v in enumerate(innov)]
    return [_write(cfg.output_dir / "innovations.csv",
                   _comments(cfg, "extract") + _rows_csv(["timestamp", "innovation"], rows))]


def cmd_forecast(cfg: RunConfig, args) -> list[Path]:
    ds = _dataset(cfg)
    model = _model(cfg, args.model)
    f = cfg.forecast
    origin = f.origin if f.origin >= 0 else ds.values.size + f.origin
    dist = forecast(model, ds.values, ForecastRequest(origin, f.horizon, f.num_trajectories,
                                                      f.seed))
    steps = [f"t+{k + 1}" for k in range(f.horizon)]
    head = _comments(cfg, "forecast") + f"# origin={origin}\n"
    traj = _rows_csv(["trajectory", *steps],
                     ([s, *_floats(row)] for s, row in enumerate(dist.samples)))
    summary = _rows_csv(["statistic", *steps],
                        [["mean", *_floats(dist.mean)], ["median", *_floats(dist.median)]])
    return [_write(cfg.output_dir / "trajectories.csv", head + traj),
            _write(cfg.output_dir / "forecast_summary.csv", head + summary)]


def evaluation_origins(model: WiaeModel, ds: SeriesDataset, horizon: int, stride: int = 1,
                       max_origins: int | None = None) -> np.ndarray:
    """Origins whose ``horizon`` future values all lie in the test split."""
    lo = max(ds.train_end - 1, history_needed(model) - 1)
    origins = np.arange(lo, ds.values.size - horizon, stride)
    return origins[:max_origins] if max_origins is not None else origins


def cmd_evaluate(cfg: RunConfig, args) -> list[Path]:
    ds = _dataset(cfg)
    model = _model(cfg, args.model)
    f, e = cfg.forecast, cfg.evaluate
    origins = evaluation_origins(model, ds, f.horizon, e.origin_stride, e.max_origins)
    if origins.size < 2:
        raise ConfigError("evaluate", f"only {origins.size} test origins available")
    n, T = origins.size, f.horizon
    mean, median, crps_v = (np.empty((n, T)) for _ in range(3))
    truth = ds.values[origins[:, None] + np.arange(1, T + 1)[None, :]]
    for lo in range(0, n, ORIGIN_CHUNK):
        chunk = origins[lo:lo + ORIGIN_CHUNK]
        samples = rolling_forecasts(model, ds.values, chunk, T, f.num_trajectories, f.seed)
        for k in range(T):
            sl = slice(lo, lo + chunk.size)
            mean[sl, k], median[sl, k], crps_v[sl, k] = summarize_samples(
                samples[:, :, k], truth[sl, k])
    name = ds.name if cfg.dataset.generator is None else cfg.dataset.generator.kind
    reports = []
    for k in range(T):
        rep = metrics_from_summaries(truth[:, k], mean[:, k], median[:, k], crps_v[:, k],
                                     k + 1, e.outlier_basis)
        reports.append(({"dataset": name, "horizon": k + 1, "method": e.method,
                         "seed": f.seed}, rep))
    final = reports[-1][1]
    head = _comments(cfg, "evaluate")
    text = _kv({"config_hash": cfg.hash(), "dataset": name, "method": e.method,
                "horizon": T, "origins": n}) + final.to_text()
    abs_err = np.abs(truth[:, -1] - median[:, -1])
    sq_err = (truth[:, -1] - mean[:, -1]) ** 2
    out = cfg.output_dir
    return [_write(out / "metrics.txt", text),
            _write(out / "metrics.csv", head + reports_csv(reports)),
            _write(out / "ecdf_abs_error.csv", head + ecdf_csv(abs_err)),
            _write(out / "ecdf_sq_error.csv", head + ecdf_csv(sq_err))]


def cmd_runstest(cfg: RunConfig, args) -> list[Path]:
    ds = _dataset(cfg)
    model = _model(cfg, args.model)
    innov, first = _innovations(model, ds)
    test = innov[max(0, ds.train_end - first):]
    report = runs_test(test)
    w1 = wasserstein_1d(test, uniform_quantiles(test.size))
    pairs = {"config_hash": cfg.hash(), "segment": "test", **report.as_dict(),
             "wasserstein_uniform": w1}
    pairs = {k: (repr(v) if isinstance(v, float) else v) for k, v in pairs.items()}
    keys = list(pairs)
    return [_write(cfg.output_dir / "runstest.txt", _kv(pairs)),
            _write(cfg.output_dir / "runstest.csv",
                   _comments(cfg, "runstest") + _rows_csv(keys, [[pairs[k] for k in keys]]))]


HANDLERS = {"generate": cmd_generate, "train": cmd_train, "extract": cmd_extract,
            "forecast": cmd_forecast, "evaluate": cmd_evaluate, "runstest": cmd_runstest}


# -- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wiae", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"wiae {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. train.epochs=5 (repeatable)")
    p.add_argument("--data", help="CSV series (replaces the config dataset)")
    p.add_argument("--kind", help="generator kind: LAR, MA or MC")
    p.add_argument("--length", type=int, help="generator length")
    p.add_argument("--profile", help="hyperparameter profile, e.g. LAR or NYISO")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--horizon", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--model", help="model file (default: <output-dir>/model.json)")
    p.add_argument("-o", "--output-dir")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> RunConfig:
    if args.config:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        base = path.parent
    else:
        doc, base = {}, Path(".")
    sets = list(args.overrides)
    if args.data:
        doc["dataset"] = {"csv": str(Path(args.data).resolve())}
    if args.kind or args.length is not None:
        gen = dict(doc.get("dataset", {}).get("generator", {})) if isinstance(
            doc.get("dataset"), dict) else {}
        if args.kind:
            gen["kind"] = args.kind
        if args.length is not None:
            gen["length"] = args.length
        doc["dataset"] = {"generator": gen}
    flag_keys = {"profile": "profile", "epochs": "train.epochs", "seed": "train.seed",
                 "horizon": "forecast.horizon", "trajectories": "forecast.num_trajectories"}
    for attr, key in flag_keys.items():
        value = getattr(args, attr)
        if value is not None:
            sets.append(f"{key}={json.dumps(value)}")
    doc = apply_overrides(doc, sets)
    out = args.output_dir or os.environ.get(OUTPUT_DIR_ENV)
    if out:
        doc["output_dir"] = str(Path(out).resolve())
    return config_from_dict(doc, base)


def _origin(exc: BaseException) -> str:
    """Innermost package module in the traceback, for diagnostics."""
    name = "wiae"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("wiae."):
            name = mod
    return name


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        paths = HANDLERS[args.command](cfg, args)
    except (WiaeError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"wiae {args.command}: {_origin(exc)}: {type(exc).__name__}: {msg}",
              file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
