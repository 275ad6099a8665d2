"""Closed-form dominant-class detection model and trace skew measurement."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError


def prob_dominant_class(N: int, a_star: float, n: int, p: float) -> float:
    """Probability that the oracle outputs one particular dominant class.

    Three ways to see label l in D: a correct answer on an input of l, a
    confusion from another dominant input, or a confusion from a
    non-dominant input.  Confusions are uniform over the N - 1 wrong labels.
    """
    if n < 1:
        raise DomainError("need at least one dominant class")
    if N < 2 or n > N:
        raise DomainError(f"invalid class counts N={N}, n={n}")
    total = (p * a_star
             + p * (1 - a_star) * (n - 1) / (N - 1)
             + (1 - p) * (1 - a_star) * n / (N - 1))
    return total / n


def prob_nondominant_class(N: int, a_star: float, n: int, p: float) -> float:
    """Same as :func:`prob_dominant_class` for one label outside D.

    With ``n == 0`` the skew is irrelevant and the result is 1/N.
    """
    if N < 2 or n < 0:
        raise DomainError(f"invalid class counts N={N}, n={n}")
    if n >= N:
        raise DomainError("no non-dominant class exists when n == N")
    if n == 0:
        p = 0.0
    m = N - n
    total = ((1 - p) * a_star
             + (1 - p) * (1 - a_star) * (m - 1) / (N - 1)
             + p * (1 - a_star) * m / (N - 1))
    return total / m


def _log_binom_pmf(k: np.ndarray, w: int, q: float) -> np.ndarray:
    return (np.array([math.lgamma(w + 1) - math.lgamma(i + 1) - math.lgamma(w - i + 1)
                      for i in k])
            + k * math.log(q) + (w - k) * math.log1p(-q))


def detection_probability(q: float, w: int, c: int) -> float:
    """P[Binomial(w, q) >= c].

    Summed directly over the upper tail in log space, so tiny tails (1e-5 and
    below) keep full relative precision.  When the upper tail is the larger
    side the complement of the lower tail is used instead.
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if c <= 0:
        return 1.0
    if c > w:
        return 0.0
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    if c > w * q:
        k = np.arange(c, w + 1)
        logs = _log_binom_pmf(k, w, q)
        top = logs.max()
        return float(min(1.0, math.exp(top) * np.exp(logs - top).sum()))
    k = np.arange(0, c)
    logs = _log_binom_pmf(k, w, q)
    top = logs.max()
    lower = math.exp(top) * np.exp(logs - top).sum()
    return float(max(0.0, 1.0 - lower))


@dataclass(frozen=True)
class RegimeSpec:
    num_classes: int
    oracle_accuracy: float
    n_dominant: int
    skew: Optional[float]
    window: int
    support: int

    def __post_init__(self):
        if not 0 <= self.n_dominant <= self.num_classes:
            raise DomainError("need 0 <= n <= N")
        if not self.window >= self.support >= 1:
            raise DomainError("need w >= c >= 1")


@dataclass(frozen=True)
class WindowSupportRow:
    index: int
    regime: RegimeSpec
    p_in: Optional[float]
    p_out: float


# Regimes 6-8 use the scene oracle's unrounded accuracy of 0.581 (often quoted as 0.58).
REFERENCE_REGIMES = (
    RegimeSpec(1000, 0.68, 5, 0.9, 30, 2),
    RegimeSpec(1000, 0.68, 10, 0.9, 30, 2),
    RegimeSpec(1000, 0.68, 10, 0.9, 60, 2),
    RegimeSpec(1000, 0.68, 10, 0.7, 60, 2),
    RegimeSpec(1000, 0.68, 10, 0.7, 90, 2),
    RegimeSpec(205, 0.581, 10, 0.9, 90, 2),
    RegimeSpec(205, 0.581, 10, 0.9, 90, 3),
    RegimeSpec(205, 0.581, 0, None, 90, 3),
)

# Published (p_in, p_out) for the regimes above; None stands for N/A.
REFERENCE_TABLE_VALUES = (
    ("0.896", "6.52E-5"),
    ("0.558", "6.53E-5"),
    ("0.891", "2.64E-4"),
    ("0.789", "4.80E-4"),
    ("0.933", "1.08E-3"),
    ("0.959", "0.019"),
    ("0.872", "1.31E-3"),
    (None, "9.29E-3"),
)


def regime_probabilities(r: RegimeSpec) -> tuple[Optional[float], float]:
    p = r.skew if r.skew is not None else 0.0
    q_out = prob_nondominant_class(r.num_classes, r.oracle_accuracy, r.n_dominant, p)
    p_out = detection_probability(q_out, r.window, r.support)
    if r.n_dominant == 0:
        return None, p_out
    q_in = prob_dominant_class(r.num_classes, r.oracle_accuracy, r.n_dominant, p)
    return detection_probability(q_in, r.window, r.support), p_out


def window_support_table(regimes: Iterable[RegimeSpec] = REFERENCE_REGIMES) -> list[WindowSupportRow]:
    rows = []
    for i, r in enumerate(regimes, start=1):
        p_in, p_out = regime_probabilities(r)
        rows.append(WindowSupportRow(i, r, p_in, p_out))
    return rows


@dataclass(frozen=True)
class SupportRecommendation:
    support: int
    p_in: Optional[float]
    p_out: float
    saturated: bool = False


def recommend_support(N: int, a_star: float, n: int, p: Optional[float], w: int,
                      target_p_out: float) -> SupportRecommendation:
    """Smallest support c whose non-dominant detection rate is <= target."""
    if not 0.0 < target_p_out <= 1.0:
        raise DomainError("target_p_out must lie in (0, 1]")
    skew = p if p is not None else 0.0
    q_out = prob_nondominant_class(N, a_star, n, skew)
    q_in = prob_dominant_class(N, a_star, n, skew) if n > 0 else None
    if q_out >= 1.0:
        return SupportRecommendation(w, detection_probability(q_in, w, w) if q_in is not None else None,
                                     1.0, saturated=True)
    for c in range(1, w + 1):
        p_out = detection_probability(q_out, w, c)
        if p_out <= target_p_out:
            p_in = detection_probability(q_in, w, c) if q_in is not None else None
            return SupportRecommendation(c, p_in, p_out)
    p_in = detection_probability(q_in, w, w) if q_in is not None else None
    return SupportRecommendation(w, p_in, detection_probability(q_out, w, w), saturated=True)


def min_cover(counts: Sequence[int], total: int, skew_pct: float) -> int:
    """Fewest labels whose combined count is strictly more than skew_pct% of total.

    Greedy over descending counts is optimal for this objective.
    """
    need = skew_pct / 100.0 * total
    acc = 0
    for used, cnt in enumerate(sorted(counts, reverse=True), start=1):
        acc += cnt
        if acc > need:
            return used
    return len(counts) + 1  # unreachable only when skew_pct >= 100


@dataclass
class SkewCurves:
    """``fractions[s][i]`` is the share of segments covered by at most ``n_values[i]`` labels."""

    segment_length: int
    num_segments: int
    n_values: np.ndarray
    fractions: dict[float, np.ndarray]
    covers: dict[float, np.ndarray]


def skew_cdf(labels: Sequence[int], segment_length: int,
             skews: Sequence[float] = (60, 70, 80, 90)) -> SkewCurves:
    labels = np.asarray(labels)
    if len(labels) == 0:
        raise DomainError("skew_cdf needs a non-empty trace")
    if segment_length < 1:
        raise DomainError("segment_length must be >= 1")
    n_seg = len(labels) // segment_length
    covers = {s: np.empty(n_seg, dtype=np.int64) for s in skews}
    for i in range(n_seg):
        seg = labels[i * segment_length:(i + 1) * segment_length]
        counts = list(Counter(seg.tolist()).values())
        for s in skews:
            covers[s][i] = min_cover(counts, segment_length, s)
    n_max = max((int(c.max()) for c in covers.values() if len(c)), default=1)
    n_values = np.arange(1, n_max + 1)
    fractions = {}
    for s, c in covers.items():
        if n_seg == 0:
            fractions[s] = np.zeros(len(n_values))
        else:
            fractions[s] = (c[None, :] <= n_values[:, None]).mean(axis=1)
    return SkewCurves(segment_length, n_seg, n_values, fractions, covers)


def format_probability(v: Optional[float]) -> str:
    if v is None:
        return "N/A"
    if v != 0.0 and abs(v) < 1e-2:
        return f"{v:.2E}"
    return f"{v:.3g}"
