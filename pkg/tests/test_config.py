import json
from pathlib import Path

import pytest

from wiae.config import apply_overrides, config_from_dict, parse_config
from wiae.errors import ConfigError


def write(tmp_path, doc):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(doc))
    return p


def test_minimal_config_defaults(tmp_path):
    (tmp_path / "prices.csv").write_text("timestamp,value\n")
    cfg = parse_config(write(tmp_path, {"dataset": "prices.csv"}))
    t = cfg.train
    assert (t.m, t.n, t.batch_size, t.adam_beta1, t.adam_beta2, t.lambda_reconstruction) == (
        20, 50, 60, 0.9, 0.999, 1.0)
    assert cfg.forecast.num_trajectories == 1000
    assert cfg.dataset.csv == tmp_path / "prices.csv"


def test_profile(tmp_path):
    cfg = config_from_dict({"dataset": {"generator": {"kind": "LAR", "length": 100}},
                            "profile": "NYISO", "train": {"epochs": 3}})
    assert (cfg.train.learning_rate, cfg.train.gp_lambda1, cfg.train.gp_lambda2) == (
        1e-5, 1.0, 1.4)
    assert cfg.train.epochs == 3


@pytest.mark.parametrize("doc, key", [
    ({"dataset": {"generator": {"kind": "LAR", "length": 9}}, "train": {"epochs": -1}},
     "train.epochs"),
    ({"dataset": {"generator": {"kind": "LAR", "length": 9}}, "train": {"epoch": 1}},
     "train.epoch"),
    ({"dataset": {"generator": {"kind": "LAR", "length": 9}}, "bogus": 1}, "bogus"),
    ({"dataset": {"generator": {"kind": "LAR", "length": "9"}}}, "dataset.generator.length"),
    ({"dataset": {"csv": "missing.csv"}}, "dataset.csv"),
    ({"dataset": {"generator": {"kind": "LAR", "length": 9}}, "format_version": 7},
     "format_version"),
    ({}, "dataset"),
])
def test_config_errors_name_key(doc, key, tmp_path):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc, tmp_path)
    assert exc.value.key == key


def test_hash_ignores_output_dir_and_tracks_content():
    base = {"dataset": {"generator": {"kind": "LAR", "length": 100}}}
    a = config_from_dict({**base, "output_dir": "x"})
    b = config_from_dict({**base, "output_dir": "y"})
    c = config_from_dict(apply_overrides(base, ["train.epochs=3"]))
    assert a.hash() == b.hash() != c.hash()
    assert c.train.epochs == 3


def test_overrides_parse_json_values():
    doc = apply_overrides({}, ["train.hidden_widths=[4,2]", "profile=LAR"])
    assert doc == {"train": {"hidden_widths": [4, 2]}, "profile": "LAR"}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])
