"""Piecewise-stationary label streams: synthetic generation and trace replay."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError, TraceError

DEFAULT_FRAME_INTERVAL = 1.0 / 6.0


@dataclass(frozen=True)
class SegmentSpec:
    n_dominant: int
    skew: float
    length: int
    dominant_set: Optional[tuple[int, ...]] = None

    def validate(self, num_classes: int) -> None:
        if self.length <= 0:
            raise ConfigError(f"segment length must be positive, got {self.length}")
        if not 0 <= self.n_dominant <= num_classes:
            raise ConfigError(
                f"n_dominant={self.n_dominant} outside [0, {num_classes}]")
        if self.n_dominant > 0 and not 0.0 <= self.skew <= 1.0:
            raise ConfigError(f"skew must lie in [0, 1], got {self.skew}")
        if self.n_dominant == num_classes and self.skew < 1.0:
            raise ConfigError("every class is dominant but skew < 1 leaves no "
                              "non-dominant label to draw")
        if self.dominant_set is not None:
            labels = set(self.dominant_set)
            if len(labels) != len(self.dominant_set) or len(labels) != self.n_dominant:
                raise ConfigError(
                    f"dominant_set must hold exactly {self.n_dominant} distinct labels")
            if any(not 0 <= lab < num_classes for lab in labels):
                raise ConfigError(f"dominant_set labels must lie in [0, {num_classes})")


@dataclass(frozen=True)
class StreamSpec:
    num_classes: int
    segments: tuple[SegmentSpec, ...]
    seed: int = 0
    frame_interval: float = DEFAULT_FRAME_INTERVAL
    # When set, the segment list is cycled (fresh dominant sets per cycle)
    # and cut to exactly this many items.
    total_items: Optional[int] = None

    def validate(self) -> None:
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if not self.segments:
            raise ConfigError("a stream needs at least one segment")
        if self.frame_interval <= 0:
            raise ConfigError("frame_interval must be positive")
        if self.total_items is not None and self.total_items < 1:
            raise ConfigError("total_items must be positive")
        for seg in self.segments:
            seg.validate(self.num_classes)

    def expanded_segments(self) -> tuple[SegmentSpec, ...]:
        if self.total_items is None:
            return tuple(self.segments)
        out, left, i = [], self.total_items, 0
        while left > 0:
            seg = self.segments[i % len(self.segments)]
            n = min(seg.length, left)
            out.append(SegmentSpec(seg.n_dominant, seg.skew, n, seg.dominant_set))
            left -= n
            i += 1
        return tuple(out)

    @property
    def length(self) -> int:
        return sum(seg.length for seg in self.expanded_segments())


@dataclass(frozen=True)
class StreamItem:
    index: int
    true_label: int
    segment_id: int


@dataclass
class Stream:
    """Labels plus the ground truth needed for regret accounting.

    ``segments`` and ``dominant_sets`` are ``None`` for replayed traces,
    where epoch boundaries are unknown.
    """

    num_classes: int
    labels: np.ndarray
    segment_ids: np.ndarray
    indices: np.ndarray
    frame_interval: float = DEFAULT_FRAME_INTERVAL
    segments: Optional[tuple[SegmentSpec, ...]] = None
    dominant_sets: Optional[tuple[tuple[int, ...], ...]] = None

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[StreamItem]:
        for idx, lab, seg in zip(self.indices.tolist(), self.labels.tolist(),
                                 self.segment_ids.tolist()):
            yield StreamItem(idx, lab, seg)

    def __getitem__(self, i: int) -> StreamItem:
        return StreamItem(int(self.indices[i]), int(self.labels[i]), int(self.segment_ids[i]))

    @property
    def has_epochs(self) -> bool:
        return self.segments is not None


def complement_draw(dominant: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Map ``draws`` in [0, N - n) onto the labels not in sorted ``dominant``."""
    if len(dominant) == 0:
        return draws
    shifted = dominant - np.arange(len(dominant))
    return draws + np.searchsorted(shifted, draws, side="right")


def generate_stream(spec: StreamSpec) -> Stream:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n_classes = spec.num_classes
    segments = spec.expanded_segments()
    labels, seg_ids, dom_sets = [], [], []
    for sid, seg in enumerate(segments):
        if seg.dominant_set is not None:
            dom = np.array(sorted(seg.dominant_set), dtype=np.int64)
        else:
            dom = np.sort(rng.choice(n_classes, size=seg.n_dominant, replace=False))
        dom_sets.append(tuple(int(d) for d in dom))
        if seg.n_dominant == 0:
            seg_labels = rng.integers(0, n_classes, size=seg.length)
        else:
            in_dom = rng.random(seg.length) < seg.skew
            seg_labels = np.empty(seg.length, dtype=np.int64)
            k = int(in_dom.sum())
            seg_labels[in_dom] = dom[rng.integers(0, len(dom), size=k)]
            n_other = n_classes - len(dom)
            if seg.length - k:
                draws = rng.integers(0, n_other, size=seg.length - k)
                seg_labels[~in_dom] = complement_draw(dom, draws)
        labels.append(seg_labels.astype(np.int64))
        seg_ids.append(np.full(seg.length, sid, dtype=np.int64))
    all_labels = np.concatenate(labels)
    return Stream(
        num_classes=n_classes,
        labels=all_labels,
        segment_ids=np.concatenate(seg_ids),
        indices=np.arange(len(all_labels), dtype=np.int64),
        frame_interval=spec.frame_interval,
        segments=segments,
        dominant_sets=tuple(dom_sets),
    )


_HEADER = re.compile(r"#\s*N\s*=\s*(\d+)\s*$")


def load_trace(path, num_classes: Optional[int] = None,
               frame_interval: float = DEFAULT_FRAME_INTERVAL) -> Stream:
    """Read an ``index,label`` trace.

    A ``#N=<int>`` header declares the class universe; an explicit
    ``num_classes`` argument wins over the header.  Without either, the
    universe is taken as ``max(label) + 1`` (at least 2).
    """
    indices: list[int] = []
    labels: list[int] = []
    label_lines: list[int] = []
    declared = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _HEADER.match(line)
                if m:
                    declared = int(m.group(1))
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise TraceError(f"expected 'index,label', got {line!r}", lineno)
            try:
                idx, lab = int(parts[0]), int(parts[1])
            except ValueError:
                raise TraceError(f"non-integer field in {line!r}", lineno) from None
            if lab < 0:
                raise TraceError(f"negative label {lab}", lineno)
            indices.append(idx)
            labels.append(lab)
            label_lines.append(lineno)

    n_classes = num_classes if num_classes is not None else declared
    if n_classes is not None:
        for lab, lineno in zip(labels, label_lines):
            if lab >= n_classes:
                raise TraceError(f"label {lab} >= declared N={n_classes}", lineno)
    else:
        n_classes = max(2, max(labels, default=0) + 1)

    arr = np.asarray(labels, dtype=np.int64)
    return Stream(
        num_classes=n_classes,
        labels=arr,
        segment_ids=np.zeros(len(arr), dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        frame_interval=frame_interval,
    )


def write_trace(path, labels: Sequence[int], num_classes: Optional[int] = None) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if num_classes is not None:
            fh.write(f"#N={num_classes}\n")
        for i, lab in enumerate(labels):
            fh.write(f"{i},{int(lab)}\n")
