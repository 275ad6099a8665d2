import dataclasses
import io
import json
import math

import numpy as np
import pytest

from oraclebandit.cascade import expected_cascade_cost
from oraclebandit.config import (config_from_dict, config_to_dict, load_config, parse_policy,
                                 preset, preset_dict, set_path)
from oraclebandit.errors import ConfigError
from oraclebandit.harness import (METRIC_COLUMNS, compute_regret, metrics_from_log, read_log,
                                  run_simulation, sweep, write_log, write_metrics_csv,
                                  write_sweep_csv)
from oraclebandit.models import BUILTIN_ORACLES, BUILTIN_TEMPLATES
from oraclebandit.stream import write_trace
from oraclebandit.weg import SPECIALIZED

from conftest import three_sigma

FACE = BUILTIN_ORACLES["face"]
F2 = BUILTIN_TEMPLATES["F2-like"]
UNIFORM = ({"n_dominant": 0, "skew": 0.0, "length": 1800},)
SKEWED = ({"n_dominant": 5, "skew": 0.9, "length": 1800},)


def test_oracle_only_cost_and_accuracy():
    res = run_simulation(preset(segments=({"n_dominant": 5, "skew": 0.9, "length": 10**5},),
                                policy="oracle"))
    assert res.metrics.mean_cost_ms == 28.8
    assert abs(res.metrics.accuracy - 0.958) <= three_sigma(0.958, 10**5)
    assert res.metrics.speedup == 1.0


def test_random_stream_matches_oracle_only():
    weg = run_simulation(preset(segments=UNIFORM, repetitions=3))
    ref = run_simulation(preset(segments=UNIFORM, repetitions=3, policy="oracle"))
    assert abs(weg.metrics.mean_cost_ms - ref.metrics.mean_cost_ms) <= 0.01 * ref.metrics.mean_cost_ms


def test_regret_zero_for_oracle_on_uniform():
    res = run_simulation(preset(segments=UNIFORM, policy="oracle"))
    assert res.metrics.regret_ms == pytest.approx(0.0, abs=1e-9)


def test_regret_identity_on_skewed_epoch():
    res = run_simulation(preset(segments=SKEWED, policy="oracle"))
    cheap = expected_cascade_cost(0.9, F2.params_at(5), 5, F2.run_cost_ms, FACE.cost_ms)
    assert res.metrics.regret_ms == pytest.approx(1800 * (FACE.cost_ms - cheap), rel=1e-12)
    assert res.metrics.regret_ms > 0


def test_weg_regret_below_oracle_only():
    for seed in range(3):
        weg = run_simulation(preset(segments=SKEWED, seed=seed))
        ref = run_simulation(preset(segments=SKEWED, seed=seed, policy="oracle"))
        assert weg.metrics.regret_ms < ref.metrics.regret_ms


def test_trace_replay_has_no_regret(tmp_path):
    rng = np.random.default_rng(0)
    trace = tmp_path / "t.csv"
    write_trace(trace, rng.integers(0, 5, 400), num_classes=FACE.num_classes)
    d = preset_dict()
    d["stream"] = {"trace": str(trace)}
    res = run_simulation(config_from_dict(d))
    assert res.metrics.regret_ms is None
    buf = io.StringIO()
    write_metrics_csv(buf, [res.metrics])
    assert buf.getvalue().strip().split("\n")[1].endswith(",NA")


def test_logs_are_deterministic_and_recomputable(tmp_path):
    cfg = preset(segments=SKEWED, repetitions=2)
    a, b = run_simulation(cfg), run_simulation(cfg)
    write_log(tmp_path / "a.jsonl", a.logs)
    write_log(tmp_path / "b.jsonl", b.logs)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    back = read_log(tmp_path / "a.jsonl")
    assert back == a.log
    for rep, m in enumerate(a.repetitions):
        recs = [r for r in back if r.repetition == rep]
        again = metrics_from_log(recs, FACE.cost_ms, run_id=m.run_id, policy=m.policy,
                                 seed=m.seed, repetition=rep, regret_ms=m.regret_ms)
        for col in ("accuracy", "mean_cost_ms", "speedup", "special_rate", "cascade_rate",
                    "retargets", "items"):
            assert getattr(again, col) == getattr(m, col)


def test_different_seeds_differ():
    a = run_simulation(preset(segments=SKEWED, seed=1))
    b = run_simulation(preset(segments=SKEWED, seed=2))
    assert [r.predicted for r in a.log] != [r.predicted for r in b.log]


def test_epsilon_sweep_check_rate():
    base = preset_dict(segments=SKEWED, repetitions=4)
    points = sweep(base, "weg.epsilon", [0.005, 0.01, 0.02])
    costs = []
    for pt in points:
        log = pt.result.log
        n_c = sum(1 for r in log if r.phase == SPECIALIZED and not r.cascaded)
        checks = sum(r.explored for r in log)
        assert abs(checks - pt.value * n_c) <= 3 * math.sqrt(n_c * pt.value * (1 - pt.value))
        costs.append(checks * FACE.cost_ms)
    assert costs == sorted(costs)


def test_seed_sweep_keeps_run_id():
    base = preset_dict(segments=({"n_dominant": 5, "skew": 0.9, "length": 300},))
    points = sweep(base, "run.seed", list(range(10)))
    ids = {pt.result.metrics.run_id for pt in points}
    assert len(ids) == 1
    assert len({pt.result.metrics.accuracy for pt in points}) > 1
    buf = io.StringIO()
    write_sweep_csv(buf, "run.seed", points)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0].split(",") == ["param", "value", *METRIC_COLUMNS]
    assert len(lines) == 1 + 2 * 10


def test_unknown_sweep_path():
    with pytest.raises(ConfigError):
        sweep(preset_dict(), "weg.no_such_knob", [1])
    with pytest.raises(ConfigError):
        set_path(preset_dict(), "stream.segments.5.length", 10)


def test_segment_length_path():
    d = set_path(preset_dict(), "stream.segments.0.length", 60)
    assert d["stream"]["segments"][0]["length"] == 60


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bogus=1),
    lambda d: d["weg"].update(tau_q=1),
    lambda d: d["run"].update(policy="greedy"),
    lambda d: d["stream"]["segments"][0].update(colour="red"),
    lambda d: d.update(oracle="unknown"),
    lambda d: d["run"].update(repetitions=0),
    lambda d: d["stream"]["segments"][0].update(n_dominant=5000),
])
def test_config_errors(mutate):
    d = preset_dict()
    mutate(d)
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_config_round_trip(tmp_path):
    cfg = preset("scene", repetitions=3)
    back = config_from_dict(json.loads(json.dumps(config_to_dict(cfg))))
    assert back.stream == cfg.stream and back.weg == cfg.weg and back.oracle == cfg.oracle
    assert back.templates[0].param_table == cfg.templates[0].param_table
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_parse_policy():
    assert parse_policy("fixed-window=45") == ("fixed_window", 45)
    with pytest.raises(ConfigError):
        parse_policy("fixed-window=x")
