import json
import math

import pytest

from relsmart.cli import main
from relsmart.construct import RowClass, row_distribution
from relsmart.core import RandomSource
from relsmart.harness import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    ResultTable,
    check_regime,
    emit_results,
    read_csv,
    run_experiment,
    to_csv,
)
from relsmart.learners import MajorityLearner, estimate_error_rate
from relsmart.stats import Estimate


def regime(n, beta):
    rows = check_regime({"experiment": "separation", "seed": 0, "regime_mode": "paper-schedule",
                         "params": {"n": n, "beta": beta}})
    return {r.name: r for r in rows}


def test_regime_tester_row_fails_at_large_n():
    r = regime(10**6, 0.1)["tester-sample-size"]
    assert r.left == math.floor(10**4.8)
    xi = math.ceil((10**6) ** 0.9) / 10**6
    m_test = 18 * 64 * 1000 * math.log(2 / xi) / xi**2
    assert r.right == pytest.approx(m_test)
    assert 3.7e7 < r.right < 3.9e7
    assert not r.holds


def test_regime_majority_threshold():
    # n = 10000 with xi = 0.01 (beta = 0.5 gives M = 100)
    r = regime(10000, 0.5)["majority-n-threshold"]
    assert r.right == pytest.approx(math.log(200) / (2 * 0.01 * 0.49**2))
    assert r.right == pytest.approx(1103, abs=1)
    assert r.holds


def test_regime_direct_mode_empty():
    assert check_regime({"experiment": "separation", "seed": 0, "params": {"n": 10}}) == []


def test_majority_error_estimate_on_row_class():
    R = RowClass(10000, 100)
    est = estimate_error_rate(MajorityLearner(), R, row_distribution(10000), [R.canonical(1)], 50, 300,
                              RandomSource(1)).estimate
    assert est.mean <= 0.03 + 3 * est.se


def _table():
    cfg = ExperimentConfig("separation", 5)
    t = ResultTable(cfg)
    t.add("separation/x", "row(n=4,M=1)", "D(4)", 3, Estimate(0.1 + 0.2, 0.01, 100))
    return t


def test_csv_header_and_one_row():
    text = to_csv(_table())
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2
    assert read_csv(text)[0]["estimate"] == repr(0.1 + 0.2)


def test_csv_roundtrip(tmp_path):
    t = _table()
    path = tmp_path / "out.csv"
    text = emit_results(t, "csv", path)
    assert path.read_text() == text
    (row,) = read_csv(text)
    assert row == dict(zip(CSV_COLUMNS, t.rows[0].as_list()))
    assert float(row["estimate"]) == t.rows[0].estimate
    js = json.loads(emit_results(t, "json"))
    assert js["rows"][0]["estimate"] == t.rows[0].estimate
    with pytest.raises(ValueError):
        emit_results(ResultTable(t.config), "csv")


def test_config_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "nope", "seed": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "separation"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "separation", "seed": 1, "trials": 5})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "separation", "seed": 1, "colour": 2})
    with pytest.raises(ConfigError):
        run_experiment({"experiment": "separation", "seed": 1, "params": {"n": 100}})


SMALL_SEPARATION = {"experiment": "separation", "seed": 2, "trials": 60,
                    "params": {"n": 2000, "M": 40, "m": 20}}


def test_small_separation_is_deterministic():
    a = run_experiment(SMALL_SEPARATION)
    b = run_experiment(SMALL_SEPARATION)
    assert to_csv(a) == to_csv(b)
    assert len(a.rows) == 3 and a.passed
    assert all(r.trials >= 30 and math.isfinite(r.ci_half_width) for r in a.rows)


def test_cli_simulate_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "sep.yaml"
    cfg.write_text(json.dumps(SMALL_SEPARATION))
    out = tmp_path / "sep.csv"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().startswith(",".join(CSV_COLUMNS))
    # an impossible upper limit on the majority error makes its check fail
    strict = dict(SMALL_SEPARATION, params=dict(SMALL_SEPARATION["params"], majority_max=-1.0))
    cfg.write_text(json.dumps(strict))
    assert main(["simulate", str(cfg), "--out", str(out)]) == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: nowhere\nseed: 1\n")
    assert main(["simulate", str(bad)]) == 2
    assert "FAIL separation/majority" in capsys.readouterr().err


def test_cli_oig_orient(tmp_path, capsys):
    path = tmp_path / "cube.json"
    path.write_text(json.dumps(["00", "01", "10", "11"]))
    assert main(["oig-orient", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(1.0) and out["duality_check"] == "ok"
    path.write_text(json.dumps({"not": "a list"}))
    assert main(["oig-orient", str(path)]) == 2


def test_cli_oracle(tmp_path, capsys):
    inst = {"domain": [0, 1], "hypotheses": ["00", "01", "10", "11"],
            "distribution": {"support": [[0, 0.5], [1, 0.5]]}, "m": 1}
    path = tmp_path / "game.json"
    path.write_text(json.dumps(inst))
    assert main(["oracle", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.25)
    path.write_text(json.dumps(dict(inst, m=7)))
    assert main(["oracle", str(path)]) == 2


def test_cli_test_uniformity(capsys):
    code = main(["test-uniformity", "--n", "20", "--xi", "0.5", "--delta", "0.2", "--trials", "10",
                 "--dist", "uniform", "--dist", "pointmass"])
    assert code == 0
    rows = {r["distribution"]: float(r["estimate"]) for r in read_csv(capsys.readouterr().out)}
    assert rows == {"uniform": 1.0, "pointmass": 0.0}
    assert main(["test-uniformity", "--n", "20", "--xi", "1.5", "--delta", "0.2"]) == 2


def test_cli_construct(capsys):
    assert main(["construct", "--universe", "120", "--n", "16", "--k", "4", "--intersection", "12",
                 "--seed", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verification"]["ok"] and out["seed"] == 3
    assert len(out["labelings"]) == 4 and all(len(b) == 16 for b in out["labelings"])
