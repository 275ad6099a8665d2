"""Run configuration: JSON loading, strict validation, and task presets.

A config file is one JSON object with the sections ``stream``, ``oracle``,
``templates``, ``weg`` and ``run``.  Unknown keys anywhere are errors.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional, Union

from .errors import ConfigError
from .models import (BUILTIN_ORACLES, BUILTIN_TEMPLATES, CompactProfile, OracleProfile,
                     SpecializationParams)
from .stream import DEFAULT_FRAME_INTERVAL, SegmentSpec, StreamSpec
from .weg import MODES, WegConfig

POLICIES = ("weg", "oracle", "variable-skew", "simple-exit")  # plus fixed-window=<w>


@dataclass(frozen=True)
class TraceSource:
    path: str
    num_classes: Optional[int] = None
    frame_interval: float = DEFAULT_FRAME_INTERVAL


@dataclass
class RunConfig:
    stream: Union[StreamSpec, TraceSource]
    oracle: OracleProfile
    templates: list
    weg: WegConfig = field(default_factory=WegConfig)
    policy: str = "weg"
    seed: int = 0
    repetitions: int = 1
    mode: str = "streaming"
    raw: Optional[dict] = field(default=None, repr=False, compare=False)

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        parse_policy(self.policy)
        if self.policy != "oracle" and not self.templates:
            raise ConfigError("the weg policy needs at least one template")
        if isinstance(self.stream, StreamSpec):
            self.stream.validate()
            if self.stream.num_classes != self.oracle.num_classes:
                raise ConfigError("oracle and stream disagree on the number of classes")
        self.weg.validate()

    @property
    def run_id(self) -> str:
        """Hash of the configuration with the run seed left out."""
        data = copy.deepcopy(self.raw) if self.raw is not None else config_to_dict(self)
        data.get("run", {}).pop("seed", None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha1(blob.encode()).hexdigest()[:10]


def parse_policy(policy: str) -> tuple[str, Optional[int]]:
    """Map a policy name onto a controller variant (``None`` for oracle-only)."""
    if policy == "weg":
        return "standard", None
    if policy == "oracle":
        return "oracle", None
    if policy == "variable-skew":
        return "variable_training_skew", None
    if policy == "simple-exit":
        return "simple_exit", None
    if policy.startswith("fixed-window="):
        try:
            w = int(policy.split("=", 1)[1])
        except ValueError:
            raise ConfigError(f"bad fixed-window size in {policy!r}") from None
        return "fixed_window", w
    raise ConfigError(f"unknown policy {policy!r}")


def _check_keys(section: dict, allowed, where: str, required=()) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {missing}")


def _parse_stream(d: dict):
    if "trace" in d:
        _check_keys(d, ("trace", "num_classes", "frame_interval"), "stream", ("trace",))
        return TraceSource(d["trace"], d.get("num_classes"),
                           float(d.get("frame_interval", DEFAULT_FRAME_INTERVAL)))
    _check_keys(d, ("num_classes", "segments", "seed", "frame_interval", "total_items"),
                "stream", ("num_classes", "segments"))
    segs = []
    for i, sd in enumerate(d["segments"]):
        _check_keys(sd, ("n_dominant", "skew", "length", "dominant_set"),
                    f"stream.segments[{i}]", ("n_dominant", "length"))
        dom = sd.get("dominant_set")
        segs.append(SegmentSpec(int(sd["n_dominant"]), float(sd.get("skew", 0.0)),
                                int(sd["length"]),
                                tuple(int(x) for x in dom) if dom is not None else None))
    total = d.get("total_items")
    return StreamSpec(int(d["num_classes"]), tuple(segs), int(d.get("seed", 0)),
                      float(d.get("frame_interval", DEFAULT_FRAME_INTERVAL)),
                      int(total) if total is not None else None)


def _parse_oracle(d, num_classes: int) -> OracleProfile:
    if isinstance(d, str):
        if d not in BUILTIN_ORACLES:
            raise ConfigError(f"unknown built-in oracle {d!r}")
        base = BUILTIN_ORACLES[d]
        return OracleProfile(base.accuracy, base.cost_ms, num_classes)
    _check_keys(d, ("accuracy", "cost_ms"), "oracle", ("accuracy", "cost_ms"))
    return OracleProfile(float(d["accuracy"]), float(d["cost_ms"]), num_classes)


def _parse_template(d, i: int) -> CompactProfile:
    if isinstance(d, str):
        if d not in BUILTIN_TEMPLATES:
            raise ConfigError(f"unknown built-in template {d!r}")
        return BUILTIN_TEMPLATES[d]
    where = f"templates[{i}]"
    _check_keys(d, ("name", "run_cost_ms", "retarget_cost_s", "params"), where,
                ("name", "run_cost_ms", "retarget_cost_s", "params"))
    table = {}
    for k, v in d["params"].items():
        try:
            n = int(k)
        except ValueError:
            raise ConfigError(f"{where}.params key {k!r} is not an integer") from None
        if len(v) != 3:
            raise ConfigError(f"{where}.params[{k}] needs [a_in, e_in_out, a_out]")
        table[n] = SpecializationParams(*map(float, v))
    return CompactProfile(str(d["name"]), float(d["run_cost_ms"]),
                          float(d["retarget_cost_s"]), table)


def _parse_weg(d: dict) -> WegConfig:
    names = [f.name for f in fields(WegConfig)]
    _check_keys(d, names, "weg")
    return WegConfig(**d)


def config_from_dict(data: dict) -> RunConfig:
    _check_keys(data, ("stream", "oracle", "templates", "weg", "run"), "config",
                ("stream", "oracle"))
    stream = _parse_stream(data["stream"])
    if isinstance(stream, StreamSpec):
        n_classes = stream.num_classes
    elif stream.num_classes is not None:
        n_classes = stream.num_classes
    else:
        n_classes = _peek_trace_classes(stream.path)
        stream = TraceSource(stream.path, n_classes, stream.frame_interval)
    oracle = _parse_oracle(data["oracle"], n_classes)
    templates = [_parse_template(t, i) for i, t in enumerate(data.get("templates", []))]
    weg = _parse_weg(data.get("weg", {}))
    run = data.get("run", {})
    _check_keys(run, ("policy", "seed", "repetitions", "mode"), "run")
    cfg = RunConfig(stream, oracle, templates, weg,
                    policy=str(run.get("policy", "weg")), seed=int(run.get("seed", 0)),
                    repetitions=int(run.get("repetitions", 1)),
                    mode=str(run.get("mode", "streaming")), raw=copy.deepcopy(data))
    cfg.validate()
    return cfg


def _peek_trace_classes(path: str) -> int:
    from .stream import load_trace
    return load_trace(path).num_classes


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    if isinstance(cfg.stream, TraceSource):
        stream = {"trace": cfg.stream.path, "frame_interval": cfg.stream.frame_interval}
        if cfg.stream.num_classes is not None:
            stream["num_classes"] = cfg.stream.num_classes
    else:
        s = cfg.stream
        stream = {"num_classes": s.num_classes, "seed": s.seed,
                  "frame_interval": s.frame_interval,
                  "segments": [{k: v for k, v in asdict(seg).items() if v is not None}
                               for seg in s.segments]}
        for seg in stream["segments"]:
            if "dominant_set" in seg:
                seg["dominant_set"] = list(seg["dominant_set"])
        if s.total_items is not None:
            stream["total_items"] = s.total_items
    templates = [{"name": t.name, "run_cost_ms": t.run_cost_ms,
                  "retarget_cost_s": t.retarget_cost_s,
                  "params": {str(n): list(p.as_tuple()) for n, p in t.param_table.items()}}
                 for t in cfg.templates]
    return {
        "stream": stream,
        "oracle": {"accuracy": cfg.oracle.accuracy, "cost_ms": cfg.oracle.cost_ms},
        "templates": templates,
        "weg": asdict(cfg.weg),
        "run": {"policy": cfg.policy, "seed": cfg.seed, "repetitions": cfg.repetitions,
                "mode": cfg.mode},
    }


def set_path(data: dict, path: str, value: Any) -> dict:
    """Return a copy of ``data`` with the dotted ``path`` replaced by ``value``.

    Numeric path parts index into lists.  The path must already exist,
    except for optional keys of a ``weg`` or ``run`` section.
    """
    out = copy.deepcopy(data)
    parts = path.split(".")
    node: Any = out
    for i, part in enumerate(parts[:-1]):
        node = _descend(node, part, ".".join(parts[: i + 1]))
    last = parts[-1]
    if isinstance(node, list):
        idx = _index(node, last, path)
        node[idx] = value
    elif isinstance(node, dict):
        optional = {f.name for f in fields(WegConfig)} | {"policy", "seed", "repetitions",
                                                          "mode", "total_items",
                                                          "frame_interval", "skew"}
        if last not in node and last not in optional:
            raise ConfigError(f"unknown parameter path {path!r}")
        node[last] = value
    else:
        raise ConfigError(f"unknown parameter path {path!r}")
    return out


def _index(node: list, part: str, where: str) -> int:
    try:
        idx = int(part)
        node[idx]
    except (ValueError, IndexError):
        raise ConfigError(f"unknown parameter path {where!r}") from None
    return idx


def _descend(node, part: str, where: str):
    if isinstance(node, list):
        return node[_index(node, part, where)]
    if isinstance(node, dict):
        if part not in node:
            if part in ("weg", "run"):
                node[part] = {}
            else:
                raise ConfigError(f"unknown parameter path {where!r}")
        return node[part]
    raise ConfigError(f"unknown parameter path {where!r}")


TASKS = {
    # task: (oracle, template, tau_a, training skew)
    "face": ("face", "F2-like", -0.05, 0.5),
    "object": ("object", "O2-like", 0.05, 0.6),
    "scene": ("scene", "S2-like", 0.05, 0.7),
}


def preset_dict(task: str = "face", segments=({"n_dominant": 5, "skew": 0.9, "length": 1800},),
                seed: int = 0, repetitions: int = 1, policy: str = "weg",
                total_items: Optional[int] = None, **weg_overrides) -> dict:
    """Config dict for one of the synthetic face/object/scene setups."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {sorted(TASKS)}")
    oracle, template, tau_a, train_skew = TASKS[task]
    stream = {"num_classes": BUILTIN_ORACLES[oracle].num_classes, "seed": 0,
              "frame_interval": DEFAULT_FRAME_INTERVAL,
              "segments": [dict(s) for s in segments]}
    if total_items is not None:
        stream["total_items"] = total_items
    weg = {"tau_a": tau_a, "training_skew": train_skew}
    weg.update(weg_overrides)
    return {
        "stream": stream,
        "oracle": oracle,
        "templates": [template],
        "weg": weg,
        "run": {"policy": policy, "seed": seed, "repetitions": repetitions,
                "mode": "streaming"},
    }


def preset(task: str = "face", **kwargs) -> RunConfig:
    return config_from_dict(preset_dict(task, **kwargs))
