"""Square-bin quantization of the a*b* plane into discrete color classes.

A grid is fixed by the bin edge ``alpha``. The shift ``beta`` moves a*b*
into the positive quadrant and ``delta`` bins cover ``[-beta, beta)`` on each
axis, giving ``delta**2`` classes. Class ``c`` sits at column ``c % delta``
(a*) and row ``c // delta`` (b*).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .colorspace import lab_to_rgb_float

VALIDATED_ALPHAS = (4, 6, 8, 10, 12, 14)
# Half-width of the a*b* range the grid must cover.
AB_HALF_RANGE = 108


@dataclass(frozen=True)
class GridParams:
    alpha: int
    beta: int
    delta: int

    def __post_init__(self):
        if self.alpha <= 0 or self.alpha % 2:
            raise ValueError(f"alpha must be a positive even integer, got {self.alpha}")
        if self.beta % self.alpha or self.delta * self.alpha != 2 * self.beta:
            raise ValueError(f"inconsistent grid {self}")

    @property
    def n_classes(self) -> int:
        return self.delta * self.delta

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "delta": self.delta}

    @classmethod
    def from_dict(cls, d: dict) -> "GridParams":
        grid = make_grid(int(d["alpha"]))
        if (grid.beta, grid.delta) != (int(d["beta"]), int(d["delta"])):
            raise ValueError(f"grid record {d} does not match alpha={grid.alpha}")
        return grid


def make_grid(alpha: int) -> GridParams:
    """Grid for bin size ``alpha``; beta is 108 rounded up to a multiple of alpha."""
    if isinstance(alpha, bool) or int(alpha) != alpha:
        raise ValueError(f"alpha must be an integer, got {alpha!r}")
    alpha = int(alpha)
    if alpha <= 0 or alpha % 2:
        raise ValueError(f"alpha must be a positive even integer, got {alpha}")
    if alpha not in VALIDATED_ALPHAS:
        warnings.warn(f"alpha={alpha} is outside the validated set {VALIDATED_ALPHAS}", stacklevel=2)
    beta = alpha * math.ceil(AB_HALF_RANGE / alpha)
    return GridParams(alpha=alpha, beta=beta, delta=2 * beta // alpha)


def _axis_bin(v, grid: GridParams) -> np.ndarray:
    idx = np.floor((np.asarray(v, dtype=np.float64) + grid.beta) / grid.alpha)
    return np.clip(idx, 0, grid.delta - 1).astype(np.int64)


def encode_ab(a, b, grid: GridParams) -> np.ndarray:
    """Class index for a*, b* (scalars or arrays). Out-of-range values clamp to the edge bin."""
    return _axis_bin(b, grid) * grid.delta + _axis_bin(a, grid)


def encode_class(a: float, b: float, grid: GridParams) -> int:
    return int(encode_ab(a, b, grid))


def decode_classes(c, grid: GridParams) -> tuple[np.ndarray, np.ndarray]:
    """Bin-center (a*, b*) for class indices ``c``."""
    c = np.asarray(c)
    if not np.issubdtype(c.dtype, np.integer):
        raise TypeError(f"class indices must be integers, got {c.dtype}")
    if c.size and (c.min() < 0 or c.max() >= grid.n_classes):
        raise ValueError(f"class index out of range [0, {grid.n_classes})")
    half = grid.alpha / 2
    a = (c % grid.delta) * grid.alpha - grid.beta + half
    b = (c // grid.delta) * grid.alpha - grid.beta + half
    return a.astype(np.float64), b.astype(np.float64)


def decode_class(c: int, grid: GridParams) -> tuple[float, float]:
    if not 0 <= c < grid.n_classes:
        raise ValueError(f"class index {c} out of range [0, {grid.n_classes})")
    a, b = decode_classes(np.int64(c), grid)
    return float(a), float(b)


def class_centers(grid: GridParams) -> np.ndarray:
    """``(n_classes, 2)`` array of bin centers, row ``c`` = (a*, b*) of class c."""
    a, b = decode_classes(np.arange(grid.n_classes), grid)
    return np.stack([a, b], axis=1)


@dataclass
class ClassMap:
    """Per-pixel class indices on a grid.

    When ``approved_hash`` is set the map is compacted: indices are dense
    positions in that approved class set instead of grid classes.
    """

    classes: np.ndarray
    grid: GridParams
    approved_hash: str | None = None
    n_dense: int | None = None

    def __post_init__(self):
        self.classes = np.asarray(self.classes)
        if self.classes.ndim != 2:
            raise ValueError(f"class map must be 2-D, got shape {self.classes.shape}")
        if not np.issubdtype(self.classes.dtype, np.integer):
            raise TypeError(f"class map must be integer, got {self.classes.dtype}")
        self.classes = self.classes.astype(np.int64)
        bound = self.n_dense if self.compacted else self.grid.n_classes
        if self.compacted and bound is None:
            raise ValueError("compacted class map needs n_dense")
        if self.classes.size and (self.classes.min() < 0 or self.classes.max() >= bound):
            raise ValueError(f"class index out of range [0, {bound})")

    @property
    def compacted(self) -> bool:
        return self.approved_hash is not None

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    @property
    def width(self) -> int:
        return self.classes.shape[1]


def encode_image(lab: np.ndarray, grid: GridParams) -> ClassMap:
    """Class map of a Lab image ``(H, W, 3)`` (L is ignored)."""
    lab = np.asarray(lab)
    return ClassMap(encode_ab(lab[..., 1], lab[..., 2], grid), grid)


def decode_map(m: ClassMap) -> np.ndarray:
    """a*b* planes ``(H, W, 2)`` of bin centers for a full-grid class map."""
    if m.compacted:
        raise ValueError("decode_map needs grid class indices; expand the compacted map first")
    a, b = decode_classes(m.classes, m.grid)
    return np.stack([a, b], axis=-1)


def quantize_ab(ab: np.ndarray, grid: GridParams) -> np.ndarray:
    """Snap a*b* planes to their bin centers."""
    ab = np.asarray(ab, dtype=np.float64)
    a, b = decode_classes(encode_ab(ab[..., 0], ab[..., 1], grid), grid)
    return np.stack([a, b], axis=-1)


@dataclass(frozen=True)
class BinAnalysisRow:
    alpha: int
    total_class_points: int
    max_dev_ab: float
    avg_dev_ab: float


def ab_deviation(grid: GridParams) -> tuple[float, float]:
    """Max and mean per-channel quantization error over every integer (a, b) in [-beta, beta)."""
    v = np.arange(-grid.beta, grid.beta)
    a, b = np.meshgrid(v, v, indexing="ij")
    ab = np.stack([a, b], axis=-1).astype(np.float64)
    dev = np.abs(quantize_ab(ab, grid) - ab)
    return float(dev.max()), float(dev.mean())


def bin_table(alphas=VALIDATED_ALPHAS) -> list[BinAnalysisRow]:
    alphas = list(alphas)
    if not alphas:
        raise ValueError("need at least one alpha")
    rows = []
    for alpha in alphas:
        grid = make_grid(alpha)
        mx, avg = ab_deviation(grid)
        rows.append(BinAnalysisRow(alpha, grid.n_classes, mx, avg))
    return rows


def rgb_deviation_sweep(grid: GridParams, centers=(50, 0, -50), lightness: float = 50.0, radius: int | None = None) -> dict:
    """Empirical RGB error of quantization around a few a*b* points at fixed L.

    For each center ``c`` every integer (a, b) in ``[c - radius, c + radius)``
    is quantized, both versions are taken to sRGB, and the per-channel
    absolute difference in 8-bit units is summarized. ``radius`` defaults to
    ``alpha``. This is a rough diagnostic; the sampling neighborhood is a
    choice, not a standard.
    """
    radius = grid.alpha if radius is None else radius
    out = {}
    for c in centers:
        v = np.arange(c - radius, c + radius)
        a, b = np.meshgrid(v, v, indexing="ij")
        ab = np.stack([a, b], axis=-1).astype(np.float64)
        L = np.full(a.shape, lightness)
        exact = lab_to_rgb_float(np.concatenate([L[..., None], ab], axis=-1))
        quant = lab_to_rgb_float(np.concatenate([L[..., None], quantize_ab(ab, grid)], axis=-1))
        dev = np.abs(exact - quant)
        out[c] = (float(dev.max()), float(dev.mean()))
    return out
