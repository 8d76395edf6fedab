import json
import subprocess
import sys

import pytest

from wiae.cli import main

CONFIG = {
    "dataset": {"generator": {"kind": "LAR", "length": 400, "seed": 1}},
    "profile": "LAR",
    "train": {"epochs": 1, "m": 4, "n": 8, "batch_size": 16, "hidden_widths": [8, 4],
              "critic_steps_per_generator": 1},
    "forecast": {"horizon": 2, "num_trajectories": 30},
    "evaluate": {"max_origins": 20},
}


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(CONFIG))
    return p


def test_generate_rows(cfg, tmp_path, capsys):
    assert main(["generate", "-c", str(cfg), "-o", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "series.csv").read_text().splitlines()
    rows = [l for l in lines if not l.startswith("#")]
    assert rows[0] == "timestamp,value" and len(rows) == 401
    assert any("config_hash=" in l for l in lines)


def test_output_dir_env(cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("WIAE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["generate", "-c", str(cfg)]) == 0
    assert (tmp_path / "env" / "series.csv").exists()


def test_flag_overrides(cfg, tmp_path):
    assert main(["generate", "-c", str(cfg), "--length", "50", "--kind", "MC",
                 "-o", str(tmp_path)]) == 0
    text = (tmp_path / "series.csv").read_text()
    assert "kind=MC length=50" in text


def test_error_is_single_line(cfg, tmp_path, capsys):
    code = main(["train", "-c", str(cfg), "--set", "train.epochs=-1", "-o", str(tmp_path)])
    err = capsys.readouterr().err.strip()
    assert code != 0 and "\n" not in err and "train.epochs" in err
    code = main(["forecast", "-c", str(cfg), "--model", str(tmp_path / "none.json")])
    assert code != 0


def test_pipeline_forecast_shape(cfg, tmp_path):
    out = str(tmp_path / "o")
    for cmd in ("train", "forecast"):
        assert main([cmd, "-c", str(cfg), "-o", out, "--trajectories", "25"]) == 0
    rows = [l for l in (tmp_path / "o" / "trajectories.csv").read_text().splitlines()
            if not l.startswith("#")]
    assert rows[0] == "trajectory,t+1,t+2" and len(rows) == 26


def test_module_entry_point(cfg, tmp_path):
    r = subprocess.run([sys.executable, "-m", "wiae.cli", "generate", "-c", str(cfg),
                        "-o", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
