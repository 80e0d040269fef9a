"""Corpus class histograms and reduction of the grid to the classes that occur.

Classes seen at least ``min_count`` times are kept. Every other class is sent
to the nearest kept class by Euclidean distance between bin centers, which is
a single k-means assignment step with the kept centers frozen.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .classgrid import ClassMap, GridParams


@dataclass
class ClassHistogram:
    grid: GridParams
    counts: np.ndarray = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.grid.n_classes, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.grid.n_classes,):
            raise ValueError(f"expected {self.grid.n_classes} counts, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def total_samples(self) -> int:
        return int(self.counts.sum())

    def add(self, m: ClassMap) -> "ClassHistogram":
        if m.grid != self.grid:
            raise ValueError(f"class map grid {m.grid} does not match histogram grid {self.grid}")
        if m.compacted:
            raise ValueError("histograms count full-grid classes, got a compacted map")
        self.counts += np.bincount(m.classes.ravel(), minlength=self.grid.n_classes)
        return self

    def __add__(self, other: "ClassHistogram") -> "ClassHistogram":
        if other.grid != self.grid:
            raise ValueError("cannot merge histograms on different grids")
        return ClassHistogram(self.grid, self.counts + other.counts)


def accumulate_histogram(maps: Iterable[ClassMap], grid: GridParams) -> ClassHistogram:
    h = ClassHistogram(grid)
    for m in maps:
        h.add(m)
    return h


@dataclass
class ApprovedClassSet:
    grid: GridParams
    approved: np.ndarray
    remap: np.ndarray
    min_count_threshold: int
    _dense: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.approved = np.asarray(self.approved, dtype=np.int64)
        self.remap = np.asarray(self.remap, dtype=np.int64)
        if self.approved.size == 0:
            raise ValueError("approved class set is empty")
        if np.any(np.diff(self.approved) <= 0):
            raise ValueError("approved classes must be strictly increasing")
        if self.remap.shape != (self.grid.n_classes,):
            raise ValueError("remap must cover every grid class")
        if not np.array_equal(self.remap[self.approved], self.approved):
            raise ValueError("remap must fix approved classes")
        if not np.isin(self.remap, self.approved).all():
            raise ValueError("remap targets must be approved classes")
        self._dense = {int(c): i for i, c in enumerate(self.approved)}

    @property
    def n_classes(self) -> int:
        return len(self.approved)

    @property
    def hash(self) -> str:
        h = hashlib.sha256()
        h.update(repr(sorted(self.grid.to_dict().items())).encode())
        h.update(self.approved.astype("<i8").tobytes())
        return h.hexdigest()[:16]

    def to_dense(self, c):
        """Grid class (or array of them, already approved) -> dense index."""
        if np.ndim(c) == 0:
            return self._dense[int(c)]
        c = np.asarray(c)
        idx = np.searchsorted(self.approved, c)
        if np.any(idx >= len(self.approved)) or np.any(self.approved[np.minimum(idx, len(self.approved) - 1)] != c):
            raise ValueError("class not in approved set")
        return idx

    def to_grid(self, i):
        """Dense index -> grid class."""
        return self.approved[i] if np.ndim(i) else int(self.approved[i])


def threshold_from_percent(total_samples: int, percent: float) -> int:
    """Absolute count threshold for a percentage of the corpus, at least 1."""
    return max(1, math.ceil(total_samples * percent / 100.0))


def nearest_approved(grid: GridParams, approved: np.ndarray) -> np.ndarray:
    """For every grid class, the approved class whose center is closest.

    Distances are compared in bin units (exact integers); ties go to the
    smaller class index.
    """
    approved = np.asarray(approved, dtype=np.int64)
    c = np.arange(grid.n_classes)
    col, row = c % grid.delta, c // grid.delta
    acol, arow = approved % grid.delta, approved // grid.delta
    d2 = (col[:, None] - acol[None, :]) ** 2 + (row[:, None] - arow[None, :]) ** 2
    # argmin returns the first minimum and approved is ascending.
    return approved[np.argmin(d2, axis=1)]


def select_classes(h: ClassHistogram, min_count: int) -> ApprovedClassSet:
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    approved = np.flatnonzero(h.counts >= min_count)
    if approved.size == 0:
        raise ValueError(f"no class has at least {min_count} samples")
    return ApprovedClassSet(h.grid, approved, nearest_approved(h.grid, approved), int(min_count))


def remap_map(m: ClassMap, s: ApprovedClassSet) -> ClassMap:
    if m.grid != s.grid:
        raise ValueError(f"class map grid {m.grid} does not match approved set grid {s.grid}")
    if m.compacted:
        raise ValueError("remap_map expects a full-grid class map")
    return ClassMap(s.remap[m.classes], m.grid)


def compact_map(m: ClassMap, s: ApprovedClassSet) -> ClassMap:
    """Remap starved classes and switch to dense indices ``[0, n_approved)``."""
    dense = s.to_dense(remap_map(m, s).classes)
    return ClassMap(dense, m.grid, approved_hash=s.hash, n_dense=s.n_classes)


def expand_map(m: ClassMap, s: ApprovedClassSet) -> ClassMap:
    """Inverse of :func:`compact_map` on the approved classes."""
    if m.approved_hash != s.hash:
        raise ValueError("class map was not compacted with this approved set")
    return ClassMap(s.approved[m.classes], m.grid)


def compact_index(s: ApprovedClassSet) -> tuple[dict, dict]:
    """(grid -> dense, dense -> grid) lookup tables."""
    fwd = {int(c): i for i, c in enumerate(s.approved)}
    return fwd, {i: c for c, i in fwd.items()}
