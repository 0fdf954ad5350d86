import json
import math
from pathlib import Path

import pytest

from obslab import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load(kind):
    return {**json.loads((CONFIGS / f"{kind}.json").read_text()), "kind": kind}


def test_validate_examples():
    assert cli.validate({**load("obs-sweep")}) == []
    bad = {**load("obs-sweep"), "R_s": 4.0}
    assert "R_s exceeds torus half-width" in cli.validate(bad)
    neg = {**load("counterexample"), "nu": -1}
    assert "ν must be positive" in cli.validate(neg)


def test_empty_config_names_missing_field():
    assert cli.validate({}) == ["missing field: kind"]
    problems = cli.validate({"kind": "hum"})
    assert "missing field: T" in problems and "missing field: theta" in problems


@pytest.mark.parametrize("kind", cli.KINDS)
def test_sample_configs_validate(kind):
    assert cli.validate(load(kind)) == []


def test_obs_sweep_run(tmp_path):
    report = cli.run(load("obs-sweep"), tmp_path)
    assert report["passed"] and report["results"]["global_min"] > 0
    assert (tmp_path / "obs-sweep.json").exists() and (tmp_path / "theta_sweep.csv").exists()


def test_decompose_run():
    report = cli.run({**load("decompose"), "d": 1, "n_theta": 5})
    assert report["passed"]
    assert all(r["budget"] <= report["results"]["R"] for r in report["results"]["runs"])


def test_reports_are_deterministic_and_revalidate(tmp_path):
    cfg = load("hum")
    a = cli.run(cfg, tmp_path / "a")
    b = cli.run(cfg, tmp_path / "b")
    for r in (a, b):
        r.pop("timing")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert cli.validate(a["config"]) == []
    assert a["seed"] == cfg["seed"]


def test_config_error_raises():
    with pytest.raises(cli.ConfigError) as err:
        cli.run({"kind": "obs-sweep", "T": 1.0})
    assert "missing field: R_s" in err.value.violations


def test_main_exit_codes(tmp_path, capsys, monkeypatch):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"T": 2.0, "R_s": 1.0, "cutoff": 4, "n_theta": 4}))
    assert cli.main(["obs-sweep", "--config", str(good), "--out", str(tmp_path / "o")]) == 0
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    assert cli.main(["hum", "--config", str(empty), "--out", str(tmp_path / "o")]) == 2
    assert "missing field" in capsys.readouterr().err
    # an impossible residual tolerance turns into an assertion failure
    strict = tmp_path / "strict.json"
    strict.write_text(json.dumps({**load("hum"), "cutoff": 4, "time_steps": 16, "tolerance": 1e-30}))
    monkeypatch.setenv("OBSLAB_THREADS", "2")
    assert cli.main(["hum", "--config", str(strict), "--out", str(tmp_path / "o")]) == 1
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert cli.main(["geometry", "--config", str(garbled)]) == 2


def test_seed_override(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"theta": 0.1, "T": 2.0, "R_s": 1.0, "cutoff": 3, "time_steps": 32}))
    cli.main(["hum", "--config", str(path), "--out", str(tmp_path), "--seed", "11"])
    report = json.loads((tmp_path / "hum.json").read_text())
    assert report["seed"] == 11 and report["config"]["seed"] == 11


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("OBSLAB_THREADS", "3")
    assert cli._threads(None) == 3
    assert cli._threads(5) == 5
    monkeypatch.setenv("OBSLAB_THREADS", "zero")
    assert cli._threads(None) is None


def test_geometry_and_counterexample_runs():
    g = cli.run(load("geometry"))
    assert g["passed"]
    assert g["results"]["thickness"]["is_thick"] and not g["results"]["gcc"]["satisfies_gcc"]
    c = cli.run({**load("counterexample"), "eps": 0.1, "steps": 2})
    assert c["passed"] and c["results"]["reports"][-1]["Q"] <= 0.1


def test_gram_oracle_run():
    report = cli.run({**load("gram-oracle"), "n_pairs": 10})
    assert report["passed"] and report["results"]["max_abs_error"] <= 1e-8
