"""Windowed epsilon-greedy specialization controller.

The controller consumes one input at a time and decides whether to pay for
the oracle (exploration) or to run the current cascade (exploitation).  It
cycles through three phases:

* ``WindowInit``: label ``w_min`` inputs with the oracle, then fold in the
  previous epoch's window if its dominant classes look the same.
* ``TemplateSelection``: estimate the cascade accuracy every template would
  reach on the window's dominant set; specialize the cheapest one that
  clears ``a* + tau_a``, otherwise keep sampling with the oracle.
* ``Specialized``: run the cascade, spot-check it against the oracle with
  probability epsilon, and fall back to ``WindowInit`` once the estimated
  accuracy or the spot-check mismatch rate says the skew has gone.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cascade import CascadedClassifier, cascaded_classify, estimate_accuracy
from .errors import ConfigError
from .models import (CompactProfile, OracleProfile, SpecializationParams,
                     oracle_classify, specialize)
from .stream import DEFAULT_FRAME_INTERVAL, StreamItem

WINDOW_INIT = "WindowInit"
TEMPLATE_SELECTION = "TemplateSelection"
SPECIALIZED = "Specialized"
# Inputs served by the oracle while a freshly chosen template is retrained.
RETARGETING = "Retargeting"

VARIANTS = ("standard", "fixed_window", "variable_training_skew", "simple_exit")
MODES = ("streaming", "batch")


@dataclass
class WegConfig:
    w_min: int = 30
    tau_r: int = 2
    tau_a: float = 0.05
    tau_fp: float = 0.5
    epsilon: float = 0.01
    # support is ``support_low`` below ``support_switch`` samples, else ``support_high``
    support_low: int = 2
    support_high: int = 3
    support_switch: int = 90
    training_skew: float = 0.6
    max_window: int = 300
    variant: str = "standard"
    fixed_window: Optional[int] = None
    # a_out multiplier applied by the variable_training_skew ablation
    skew_degradation: float = 0.3

    def validate(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.w_min < 1:
            raise ConfigError("w_min must be >= 1")
        if self.max_window < self.w_min:
            raise ConfigError("max_window must be >= w_min")
        if self.support_low < 1 or self.support_high < 1:
            raise ConfigError("support thresholds must be >= 1")
        if not 0.0 <= self.training_skew <= 1.0:
            raise ConfigError("training_skew must lie in [0, 1]")
        if not 0.0 <= self.skew_degradation <= 1.0:
            raise ConfigError("skew_degradation must lie in [0, 1]")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "fixed_window":
            if self.fixed_window is None or not 1 <= self.fixed_window <= self.max_window:
                raise ConfigError("fixed_window variant needs 1 <= fixed_window <= max_window")


def support_threshold(config: WegConfig, w: int) -> int:
    return config.support_low if w < config.support_switch else config.support_high


def dom_classes(window: Sequence[int], support: int) -> frozenset:
    """Labels seen at least ``support`` times in ``window``."""
    if support < 1:
        raise ConfigError("support must be >= 1")
    return frozenset(lab for lab, cnt in Counter(window).items() if cnt >= support)


@dataclass(frozen=True)
class Behavior:
    merge_windows: bool
    init_samples: Optional[int]
    adaptive_training_skew: bool
    a_out_factor: float
    exit_rule: str  # "accuracy" or "skew"


def apply_ablation(config: WegConfig) -> Behavior:
    v = config.variant
    if v == "standard":
        return Behavior(True, None, False, 1.0, "accuracy")
    if v == "fixed_window":
        if config.fixed_window is None:
            raise ConfigError("fixed_window variant needs a window size")
        return Behavior(False, config.fixed_window, False, 1.0, "accuracy")
    if v == "variable_training_skew":
        return Behavior(True, None, True, config.skew_degradation, "accuracy")
    if v == "simple_exit":
        return Behavior(True, None, False, 1.0, "skew")
    raise ConfigError(f"unknown variant {v!r}")


@dataclass
class WegState:
    phase: str = WINDOW_INIT
    epoch: int = 1
    window: list = field(default_factory=list)       # S_j, oracle labels
    prev_window: list = field(default_factory=list)  # S_{j-1}
    init_count: int = 0
    w: int = 0
    active: Optional[CascadedClassifier] = None
    params: Optional[SpecializationParams] = None    # controller's view of the active model
    evidence: deque = field(default_factory=deque)   # in-D flags behind the running skew
    evidence_hits: int = 0
    n_c: int = 0
    n_star: int = 0
    entry_skew: float = 0.0
    skew: float = 0.0
    training_left: int = 0


@dataclass(frozen=True)
class StepResult:
    label: int
    cost: float
    phase: str
    cascaded: bool = False
    explored: bool = False
    retargeted: bool = False
    exited: bool = False
    dom_size: Optional[int] = None
    window_size: Optional[int] = None
    skew: Optional[float] = None


@dataclass(frozen=True)
class Candidate:
    template: CompactProfile
    dominant: frozenset
    skew: float
    params: SpecializationParams
    accuracy: float
    expected_cost: float


class WegController:
    """Owns one :class:`WegState` and advances it one input at a time."""

    def __init__(self, config: WegConfig, oracle: OracleProfile,
                 templates: Sequence[CompactProfile], mode: str = "streaming",
                 frame_interval: float = DEFAULT_FRAME_INTERVAL):
        config.validate()
        if not templates:
            raise ConfigError("the controller needs at least one template")
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        for t in templates:
            if t.run_cost_ms >= oracle.cost_ms:
                raise ConfigError(f"template {t.name!r} is not cheaper than the oracle")
        self.config = config
        self.oracle = oracle
        self.templates = list(templates)
        self.mode = mode
        self.frame_interval = frame_interval
        self.behavior = apply_ablation(config)
        self.state = WegState()

    @property
    def threshold(self) -> float:
        return self.oracle.accuracy + self.config.tau_a

    def step(self, item: StreamItem, rng: np.random.Generator) -> StepResult:
        s = self.state
        if s.phase == WINDOW_INIT:
            return self._window_init(item, rng)
        if s.phase == TEMPLATE_SELECTION:
            return self._template_selection(item, rng)
        if s.training_left > 0:
            return self._retraining(item, rng)
        return self._specialized(item, rng)

    def _ask_oracle(self, item: StreamItem, rng) -> int:
        return oracle_classify(self.oracle, item.true_label, rng)

    def _append_window(self, label: int) -> None:
        s = self.state
        s.window.append(label)
        if len(s.window) > self.config.max_window:
            del s.window[: len(s.window) - self.config.max_window]

    def _window_init(self, item, rng) -> StepResult:
        s, cfg = self.state, self.config
        y = self._ask_oracle(item, rng)
        self._append_window(y)
        s.init_count += 1
        target = self.behavior.init_samples or cfg.w_min
        if s.init_count >= target:
            if self.behavior.merge_windows and s.prev_window:
                prev = dom_classes(s.prev_window, support_threshold(cfg, len(s.prev_window)))
                cur = dom_classes(s.window, support_threshold(cfg, len(s.window)))
                if len(prev ^ cur) <= cfg.tau_r:
                    s.window = (s.prev_window + s.window)[-cfg.max_window:]
            s.w = len(s.window)
            s.init_count = 0
            s.phase = TEMPLATE_SELECTION
        return StepResult(y, self.oracle.cost_ms, WINDOW_INIT)

    def candidates(self) -> list[Candidate]:
        """Templates whose estimated cascade accuracy clears the bar on the current window."""
        s, cfg = self.state, self.config
        recent = s.window[-s.w:] if s.w else []
        if not recent:
            return []
        dom = dom_classes(recent, support_threshold(cfg, len(recent)))
        if not dom:
            return []
        p = sum(1 for y in recent if y in dom) / len(recent)
        out = []
        for t in self.templates:
            params = t.params_at(len(dom))
            acc = estimate_accuracy(p, params, self.oracle.accuracy)
            if acc >= self.threshold:
                stay = p * params.a_in + p * params.wrong_in
                cost = t.run_cost_ms + (1.0 - stay) * self.oracle.cost_ms
                out.append(Candidate(t, dom, p, params, acc, cost))
        return out

    def _template_selection(self, item, rng) -> StepResult:
        passing = self.candidates()
        if passing:
            best = min(passing, key=lambda c: c.expected_cost)
            return self._retarget(best, item, rng)
        y = self._ask_oracle(item, rng)
        self._append_window(y)
        return StepResult(y, self.oracle.cost_ms, TEMPLATE_SELECTION)

    def _retarget(self, cand: Candidate, item, rng) -> StepResult:
        s, cfg, beh = self.state, self.config, self.behavior
        skew = cand.skew if beh.adaptive_training_skew else cfg.training_skew
        model = specialize(cand.template, cand.dominant, skew, beh.a_out_factor)
        s.active = CascadedClassifier(model, self.oracle)
        s.params = cand.params
        s.phase = SPECIALIZED
        s.n_c = s.n_star = 0
        s.entry_skew = s.skew = cand.skew
        recent = s.window[-s.w:]
        s.evidence = deque((y in cand.dominant for y in recent),
                           maxlen=max(cfg.w_min, s.w))
        s.evidence_hits = sum(s.evidence)
        charge = cand.template.retarget_cost_s * 1000.0
        info = dict(retargeted=True, dom_size=len(cand.dominant), window_size=s.w,
                    skew=cand.skew)

        if self.mode == "streaming":
            routed = math.ceil(cand.template.retarget_cost_s / self.frame_interval - 1e-9)
            s.training_left = max(routed, 1) - 1
            y = self._ask_oracle(item, rng)
            self._observe(y)
            return StepResult(y, self.oracle.cost_ms + charge, RETARGETING, **info)

        s.training_left = 0
        res = self._specialized(item, rng)
        return StepResult(res.label, res.cost + charge, SPECIALIZED, res.cascaded,
                          res.explored, exited=res.exited, **info)

    def _retraining(self, item, rng) -> StepResult:
        s = self.state
        s.training_left -= 1
        y = self._ask_oracle(item, rng)
        self._observe(y)
        return StepResult(y, self.oracle.cost_ms, RETARGETING)

    def _observe(self, label: int) -> None:
        s = self.state
        if len(s.evidence) == s.evidence.maxlen:
            s.evidence_hits -= s.evidence[0]
        hit = label in s.active.specialized.dominant_set
        s.evidence.append(hit)
        s.evidence_hits += hit
        s.skew = s.evidence_hits / len(s.evidence)

    def _specialized(self, item, rng) -> StepResult:
        s, cfg = self.state, self.config
        out = cascaded_classify(s.active, item.true_label, rng)
        cost = out.cost
        explored = False
        if not out.cascaded:
            # the epsilon draw only happens on non-cascaded inputs
            if cfg.epsilon > 0 and rng.random() < cfg.epsilon:
                explored = True
                cost += self.oracle.cost_ms
                if self._ask_oracle(item, rng) != out.label:
                    s.n_star += 1
            s.n_c += 1
        self._observe(out.label)

        if self.behavior.exit_rule == "skew":
            leave = s.skew < s.entry_skew
        else:
            acc = estimate_accuracy(s.skew, s.params, self.oracle.accuracy)
            leave = acc < self.threshold
            if not leave and cfg.epsilon > 0 and s.n_c > 0:
                leave = s.n_star / (s.n_c * cfg.epsilon) > cfg.tau_fp
        if leave:
            self._exit()
        return StepResult(out.label, cost, SPECIALIZED, out.cascaded, explored,
                          exited=leave)

    def _exit(self) -> None:
        s = self.state
        s.epoch += 1
        s.prev_window = s.window
        s.window = []
        s.init_count = 0
        s.w = 0
        s.active = None
        s.params = None
        s.evidence = deque()
        s.evidence_hits = 0
        s.training_left = 0
        s.phase = WINDOW_INIT


def step(state: WegState, controller: WegController, item: StreamItem,
         rng: np.random.Generator) -> tuple[StepResult, WegState]:
    """Functional wrapper: advance ``controller`` from ``state`` by one input."""
    controller.state = state
    result = controller.step(item, rng)
    return result, controller.state
