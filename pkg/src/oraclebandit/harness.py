"""Simulation driver, run metrics, regret accounting and parameter sweeps."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .cascade import estimate_accuracy, expected_cascade_cost
from .config import RunConfig, TraceSource, config_from_dict, config_to_dict, parse_policy, set_path
from .models import CompactProfile, OracleProfile, oracle_classify
from .stream import Stream, StreamSpec, generate_stream, load_trace
from .weg import RETARGETING, SPECIALIZED, WegController

METRIC_COLUMNS = ("run_id", "policy", "seed", "repetition", "items", "accuracy",
                  "mean_cost_ms", "oracle_only_cost_ms", "speedup", "special_rate",
                  "cascade_rate", "retargets", "mean_dom_size", "mean_window_size",
                  "regret_ms")

LOG_FIELDS = ("repetition", "t", "true_label", "predicted", "correct", "phase",
              "cascaded", "explored", "retargeted", "cost_ms")


@dataclass(frozen=True)
class StepRecord:
    repetition: int
    t: int
    true_label: int
    predicted: int
    correct: bool
    phase: str
    cascaded: bool
    explored: bool
    retargeted: bool
    cost_ms: float

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), separators=(",", ":"))


@dataclass
class RunMetrics:
    run_id: str
    policy: str
    seed: int
    repetition: object  # int, or "mean" for the aggregate row
    items: int
    accuracy: float
    mean_cost_ms: float
    oracle_only_cost_ms: float
    speedup: float
    special_rate: float
    cascade_rate: float
    retargets: float
    mean_dom_size: float
    mean_window_size: float
    regret_ms: Optional[float]

    def row(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_COLUMNS}


@dataclass
class SimulationResult:
    metrics: RunMetrics
    repetitions: list
    logs: list
    streams: list

    @property
    def log(self) -> list:
        return [rec for rep in self.logs for rec in rep]


def repetition_seeds(stream_seed: int, run_seed: int, repetition: int) -> tuple[int, np.random.SeedSequence]:
    """Stream seed and controller seed sequence for one repetition.

    Every policy run with the same seeds sees the same inputs and the same
    random-number stream, which keeps policy comparisons paired.
    """
    root = np.random.SeedSequence([stream_seed & 0xFFFFFFFFFFFFFFFF,
                                   run_seed & 0xFFFFFFFFFFFFFFFF, repetition])
    stream_ss, ctrl_ss = root.spawn(2)
    return int(stream_ss.generate_state(1, np.uint64)[0]), ctrl_ss


def build_stream(cfg: RunConfig, repetition: int) -> tuple[Stream, np.random.Generator]:
    if isinstance(cfg.stream, TraceSource):
        _, ctrl = repetition_seeds(0, cfg.seed, repetition)
        stream = load_trace(cfg.stream.path, cfg.stream.num_classes, cfg.stream.frame_interval)
        return stream, np.random.default_rng(ctrl)
    spec: StreamSpec = cfg.stream
    stream_seed, ctrl = repetition_seeds(spec.seed, cfg.seed, repetition)
    stream = generate_stream(dataclasses.replace(spec, seed=stream_seed))
    return stream, np.random.default_rng(ctrl)


def _controller(cfg: RunConfig, frame_interval: float) -> Optional[WegController]:
    variant, fixed = parse_policy(cfg.policy)
    if variant == "oracle":
        return None
    weg = dataclasses.replace(cfg.weg, variant=variant,
                              fixed_window=fixed if fixed is not None else cfg.weg.fixed_window)
    return WegController(weg, cfg.oracle, cfg.templates, cfg.mode, frame_interval)


def run_once(cfg: RunConfig, repetition: int = 0):
    """One repetition: returns (log, stream, dom sizes, window sizes)."""
    stream, rng = build_stream(cfg, repetition)
    ctrl = _controller(cfg, stream.frame_interval)
    log, dom_sizes, window_sizes = [], [], []
    oracle = cfg.oracle
    for t, item in enumerate(stream):
        if ctrl is None:
            y = oracle_classify(oracle, item.true_label, rng)
            rec = StepRecord(repetition, t, item.true_label, y, y == item.true_label,
                             "Oracle", False, False, False, oracle.cost_ms)
        else:
            res = ctrl.step(item, rng)
            if res.retargeted:
                dom_sizes.append(res.dom_size)
                window_sizes.append(res.window_size)
            rec = StepRecord(repetition, t, item.true_label, res.label,
                             res.label == item.true_label, res.phase, res.cascaded,
                             res.explored, res.retargeted, res.cost)
        log.append(rec)
    return log, stream, dom_sizes, window_sizes


def metrics_from_log(log: Sequence[StepRecord], oracle_cost_ms: float, *, run_id: str = "",
                     policy: str = "", seed: int = 0, repetition=0,
                     dom_sizes=(), window_sizes=(), regret_ms=None) -> RunMetrics:
    items = len(log)
    total = math.fsum(r.cost_ms for r in log)
    mean_cost = total / items if items else 0.0
    correct = sum(1 for r in log if r.correct)
    special = [r for r in log if r.phase == SPECIALIZED]
    cascades = sum(1 for r in special if r.cascaded)
    return RunMetrics(
        run_id=run_id, policy=policy, seed=seed, repetition=repetition, items=items,
        accuracy=correct / items if items else 0.0,
        mean_cost_ms=mean_cost,
        oracle_only_cost_ms=oracle_cost_ms,
        speedup=oracle_cost_ms / mean_cost if mean_cost > 0 else math.inf,
        special_rate=len(special) / items if items else 0.0,
        cascade_rate=cascades / len(special) if special else 0.0,
        retargets=sum(1 for r in log if r.retargeted),
        mean_dom_size=float(np.mean(dom_sizes)) if len(dom_sizes) else math.nan,
        mean_window_size=float(np.mean(window_sizes)) if len(window_sizes) else math.nan,
        regret_ms=regret_ms,
    )


def epoch_comparator_costs(stream: Stream, oracle: OracleProfile,
                           templates: Sequence[CompactProfile], tau_a: float) -> list[float]:
    """Per-item cost of the best classifier for each epoch.

    Candidates are the oracle and every template perfectly specialized to the
    epoch's dominant set, restricted to cascades whose estimated accuracy
    meets ``a* + tau_a``.  Without that restriction a cascade would look
    cheap on an unskewed epoch purely by answering wrongly.
    """
    if not stream.has_epochs:
        raise ValueError("regret needs known epoch boundaries")
    best = []
    for seg, dom in zip(stream.segments, stream.dominant_sets):
        cost = oracle.cost_ms
        if seg.n_dominant > 0:
            for t in templates:
                params = t.params_at(len(dom))
                if estimate_accuracy(seg.skew, params, oracle.accuracy) < oracle.accuracy + tau_a:
                    continue
                cost = min(cost, expected_cascade_cost(seg.skew, params, len(dom),
                                                       t.run_cost_ms, oracle.cost_ms))
        best.append(cost)
    return best


def compute_regret(log: Sequence[StepRecord], stream: Stream, oracle: OracleProfile,
                   templates: Sequence[CompactProfile], tau_a: float) -> Optional[float]:
    """Total actual cost minus the per-epoch best expected cost; None for traces."""
    if not stream.has_epochs:
        return None
    best = epoch_comparator_costs(stream, oracle, templates, tau_a)
    comparator = sum(best[seg] * (stream.segment_ids == seg).sum() for seg in range(len(best)))
    return math.fsum(r.cost_ms for r in log) - float(comparator)


def _mean_row(rows: list[RunMetrics]) -> RunMetrics:
    def avg(name):
        vals = [getattr(r, name) for r in rows]
        if any(v is None for v in vals):
            return None
        finite = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
        return float(np.mean(finite)) if finite else math.nan

    first = rows[0]
    return RunMetrics(
        run_id=first.run_id, policy=first.policy, seed=first.seed, repetition="mean",
        items=int(round(np.mean([r.items for r in rows]))),
        accuracy=avg("accuracy"), mean_cost_ms=avg("mean_cost_ms"),
        oracle_only_cost_ms=first.oracle_only_cost_ms, speedup=avg("speedup"),
        special_rate=avg("special_rate"), cascade_rate=avg("cascade_rate"),
        retargets=avg("retargets"), mean_dom_size=avg("mean_dom_size"),
        mean_window_size=avg("mean_window_size"), regret_ms=avg("regret_ms"))


def run_simulation(cfg: RunConfig) -> SimulationResult:
    cfg.validate()
    run_id = cfg.run_id
    per_rep, logs, streams = [], [], []
    for rep in range(cfg.repetitions):
        log, stream, doms, wins = run_once(cfg, rep)
        regret = compute_regret(log, stream, cfg.oracle, cfg.templates, cfg.weg.tau_a)
        per_rep.append(metrics_from_log(
            log, cfg.oracle.cost_ms, run_id=run_id, policy=cfg.policy, seed=cfg.seed,
            repetition=rep, dom_sizes=doms, window_sizes=wins, regret_ms=regret))
        logs.append(log)
        streams.append(stream)
    return SimulationResult(_mean_row(per_rep), per_rep, logs, streams)


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_metrics_csv(path_or_file, rows: Iterable[RunMetrics], extra: Optional[dict] = None) -> None:
    extra = extra or {}
    cols = list(extra) + list(METRIC_COLUMNS)

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            vals = dict(extra, **r.row())
            w.writerow([_fmt(vals[c]) for c in cols])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            emit(fh)


def write_log(path, logs: Iterable[Sequence[StepRecord]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            for rec in log:
                fh.write(rec.to_json())
                fh.write("\n")


def read_log(path) -> list[StepRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(StepRecord(**json.loads(line)))
    return out


@dataclass
class SweepPoint:
    value: object
    result: SimulationResult


def sweep(base: dict, param: str, values: Sequence) -> list[SweepPoint]:
    """One full run (with repetitions) per value of the dotted ``param``."""
    points = []
    for v in values:
        cfg = config_from_dict(set_path(base, param, v))
        points.append(SweepPoint(v, run_simulation(cfg)))
    return points


def sweep_rows(param: str, points: Sequence[SweepPoint]) -> list[dict]:
    rows = []
    for pt in points:
        for m in pt.result.repetitions + [pt.result.metrics]:
            rows.append(dict({"param": param, "value": pt.value}, **m.row()))
    return rows


def write_sweep_csv(path_or_file, param: str, points: Sequence[SweepPoint]) -> None:
    cols = ["param", "value"] + list(METRIC_COLUMNS)

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in sweep_rows(param, points):
            w.writerow([_fmt(row[c]) for c in cols])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            emit(fh)


def as_config_dict(cfg) -> dict:
    if isinstance(cfg, dict):
        return cfg
    return cfg.raw if cfg.raw is not None else config_to_dict(cfg)
