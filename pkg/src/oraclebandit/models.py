"""Stochastic stand-ins for the oracle and compact classifiers.

No network is executed here: each classifier is a small probabilistic model
parameterised by its accuracy figures and a per-call cost.  Scalar functions
drive the step-by-step controller; the ``*_many`` variants draw whole arrays
at once and are used for Monte-Carlo checks.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError, ControllerError

#: Output of a specialized model that means "not one of my classes".
OTHER = -1


@dataclass(frozen=True)
class OracleProfile:
    accuracy: float
    cost_ms: float
    num_classes: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ConfigError(f"oracle accuracy must lie in [0, 1], got {self.accuracy}")
        if self.cost_ms <= 0:
            raise ConfigError(f"oracle cost must be positive, got {self.cost_ms}")
        if self.num_classes < 2:
            raise ConfigError("oracle needs at least 2 classes")


@dataclass(frozen=True)
class SpecializationParams:
    """Behaviour of a retargeted model at one dominant-set size.

    a_in: correct on dominant inputs; e_in_out: dominant inputs sent to
    "other"; a_out: non-dominant inputs correctly sent to "other".
    """

    a_in: float
    e_in_out: float
    a_out: float

    def __post_init__(self):
        for name in ("a_in", "e_in_out", "a_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.a_in + self.e_in_out > 1.0 + 1e-12:
            raise ConfigError("a_in + e_in_out must not exceed 1")

    @property
    def wrong_in(self) -> float:
        return max(0.0, 1.0 - self.a_in - self.e_in_out)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a_in, self.e_in_out, self.a_out)


@dataclass(frozen=True)
class CompactProfile:
    name: str
    run_cost_ms: float
    retarget_cost_s: float
    param_table: Mapping[int, SpecializationParams] = field(hash=False)

    def __post_init__(self):
        if not self.param_table:
            raise ConfigError(f"template {self.name!r} has an empty param_table")
        if self.run_cost_ms <= 0 or self.retarget_cost_s < 0:
            raise ConfigError(f"template {self.name!r} has non-positive costs")
        table = {int(k): v for k, v in sorted(self.param_table.items())}
        if any(k < 1 for k in table):
            raise ConfigError("param_table keys are dominant-set sizes and must be >= 1")
        object.__setattr__(self, "param_table", table)

    def params_at(self, n: int) -> SpecializationParams:
        return interpolate_profile(self.param_table, n)


def interpolate_profile(table: Mapping[int, SpecializationParams], n: float) -> SpecializationParams:
    """Componentwise linear interpolation in ``n``, clamped at the key range."""
    if not table:
        raise ConfigError("cannot interpolate an empty table")
    keys = sorted(table)
    if n <= keys[0]:
        return table[keys[0]]
    if n >= keys[-1]:
        return table[keys[-1]]
    hi = bisect_left(keys, n)
    if keys[hi] == n:
        return table[keys[hi]]
    k0, k1 = keys[hi - 1], keys[hi]
    t = (n - k0) / (k1 - k0)
    lo_p, hi_p = table[k0], table[k1]
    vals = [a + t * (b - a) for a, b in zip(lo_p.as_tuple(), hi_p.as_tuple())]
    return SpecializationParams(*vals)


@dataclass(frozen=True)
class SpecializedModel:
    template: CompactProfile
    dominant_set: frozenset
    params: SpecializationParams
    training_skew: float
    # Multiplier on a_out at classification time; < 1 models a retarget on
    # an over-skewed training set.  The controller's estimates never see it.
    a_out_factor: float = 1.0
    _sorted: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_sorted", tuple(sorted(self.dominant_set)))

    @property
    def size(self) -> int:
        return len(self.dominant_set)

    @property
    def effective_a_out(self) -> float:
        return self.params.a_out * self.a_out_factor


def specialize(template: CompactProfile, dominant_set, training_skew: float,
               a_out_factor: float = 1.0) -> SpecializedModel:
    dom = frozenset(int(x) for x in dominant_set)
    if not dom:
        raise ControllerError("asked to specialize on an empty dominant set")
    return SpecializedModel(template, dom, template.params_at(len(dom)),
                            training_skew, a_out_factor)


def oracle_classify(profile: OracleProfile, true_label: int, rng: np.random.Generator) -> int:
    if rng.random() < profile.accuracy:
        return true_label
    wrong = int(rng.integers(profile.num_classes - 1))
    return wrong + 1 if wrong >= true_label else wrong


def oracle_classify_many(profile: OracleProfile, labels: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    correct = rng.random(len(labels)) < profile.accuracy
    wrong = rng.integers(0, profile.num_classes - 1, size=len(labels))
    wrong = wrong + (wrong >= labels)
    return np.where(correct, labels, wrong)


def specialized_classify(model: SpecializedModel, true_label: int,
                         rng: np.random.Generator) -> int:
    """Returns an in-context label or :data:`OTHER`."""
    dom = model._sorted
    u = rng.random()
    if true_label in model.dominant_set:
        if u < model.params.a_in:
            return true_label
        if u < model.params.a_in + model.params.e_in_out or len(dom) == 1:
            return OTHER
        pos = dom.index(true_label)
        r = int(rng.integers(len(dom) - 1))
        return dom[r + 1] if r >= pos else dom[r]
    if u < model.effective_a_out:
        return OTHER
    return dom[int(rng.integers(len(dom)))]


def specialized_classify_many(model: SpecializedModel, labels: np.ndarray,
                              rng: np.random.Generator) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    dom = np.asarray(model._sorted, dtype=np.int64)
    size = len(labels)
    u = rng.random(size)
    pos = np.searchsorted(dom, labels)
    pos_c = np.minimum(pos, len(dom) - 1)
    inside = dom[pos_c] == labels

    out = np.full(size, OTHER, dtype=np.int64)
    a_in, e = model.params.a_in, model.params.e_in_out
    hit = inside & (u < a_in)
    out[hit] = labels[hit]
    confused = inside & (u >= a_in + e)
    if len(dom) > 1:
        r = rng.integers(0, len(dom) - 1, size=size)
        r = r + (r >= pos_c)
        out[confused] = dom[r[confused]]
    false_pos = ~inside & (u >= model.effective_a_out)
    fp_pick = rng.integers(0, len(dom), size=size)
    out[false_pos] = dom[fp_pick[false_pos]]
    return out


def _table(rows):
    return {n: SpecializationParams(*vals) for n, vals in rows.items()}


# Costs come from the published oracle/compact timings; the accuracy tables
# are plausible defaults, not measurements, and are meant to be overridden.
BUILTIN_TEMPLATES = {
    "F2-like": CompactProfile(
        "F2-like", run_cost_ms=1.93, retarget_cost_s=4.0,
        param_table=_table({
            1: (0.98, 0.01, 0.93),
            5: (0.95, 0.03, 0.90),
            10: (0.92, 0.05, 0.88),
            15: (0.89, 0.06, 0.86),
            20: (0.86, 0.08, 0.84),
        })),
    "O2-like": CompactProfile(
        "O2-like", run_cost_ms=2.8, retarget_cost_s=14.0,
        param_table=_table({
            5: (0.85, 0.06, 0.80),
            10: (0.80, 0.08, 0.78),
            15: (0.76, 0.10, 0.75),
            20: (0.72, 0.12, 0.72),
        })),
    "S2-like": CompactProfile(
        "S2-like", run_cost_ms=2.44, retarget_cost_s=14.0,
        param_table=_table({
            5: (0.80, 0.07, 0.78),
            10: (0.74, 0.09, 0.75),
            15: (0.69, 0.11, 0.72),
            20: (0.64, 0.13, 0.70),
        })),
}

BUILTIN_ORACLES = {
    "face": OracleProfile(accuracy=0.958, cost_ms=28.8, num_classes=2622),
    "object": OracleProfile(accuracy=0.689, cost_ms=11.0, num_classes=1000),
    "scene": OracleProfile(accuracy=0.581, cost_ms=28.8, num_classes=205),
}
