"""A specialized model chained in front of the oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import (OTHER, OracleProfile, SpecializationParams, SpecializedModel,
                     oracle_classify, oracle_classify_many, specialized_classify,
                     specialized_classify_many)


@dataclass(frozen=True)
class CascadedClassifier:
    specialized: SpecializedModel
    oracle: OracleProfile

    def __post_init__(self):
        if self.specialized.template.run_cost_ms >= self.oracle.cost_ms:
            raise ConfigError(
                f"template {self.specialized.template.name!r} is not cheaper than the oracle")

    @property
    def fast_cost(self) -> float:
        return self.specialized.template.run_cost_ms

    @property
    def slow_cost(self) -> float:
        return self.specialized.template.run_cost_ms + self.oracle.cost_ms


@dataclass(frozen=True)
class CascadeOutcome:
    label: int
    cascaded: bool
    cost: float


def cascaded_classify(cc: CascadedClassifier, true_label: int,
                      rng: np.random.Generator) -> CascadeOutcome:
    y = specialized_classify(cc.specialized, true_label, rng)
    if y != OTHER:
        return CascadeOutcome(y, False, cc.fast_cost)
    # The oracle's answer is final, even when it lands inside D.
    return CascadeOutcome(oracle_classify(cc.oracle, true_label, rng), True, cc.slow_cost)


def cascaded_classify_many(cc: CascadedClassifier, labels: np.ndarray,
                           rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised cascade; returns ``(predicted, cascaded)`` arrays."""
    first = specialized_classify_many(cc.specialized, labels, rng)
    cascaded = first == OTHER
    fallback = oracle_classify_many(cc.oracle, labels, rng)
    return np.where(cascaded, fallback, first), cascaded


def estimate_accuracy(p: float, params: SpecializationParams, a_star: float) -> float:
    """Expected accuracy of the cascade when a fraction ``p`` of inputs is in D.

    Correct fast answers on dominant inputs, plus dominant inputs sent to the
    oracle, plus non-dominant inputs correctly sent to the oracle.
    """
    return (p * params.a_in
            + p * params.e_in_out * a_star
            + (1.0 - p) * params.a_out * a_star)


def cascade_probability(p: float, params: SpecializationParams, dom_size: int) -> float:
    """Probability that an input falls through to the oracle."""
    wrong_to_other = params.wrong_in if dom_size == 1 else 0.0
    return p * (params.e_in_out + wrong_to_other) + (1.0 - p) * params.a_out


def expected_cascade_cost(p: float, params: SpecializationParams, dom_size: int,
                          run_cost_ms: float, oracle_cost_ms: float) -> float:
    return run_cost_ms + cascade_probability(p, params, dom_size) * oracle_cost_ms
