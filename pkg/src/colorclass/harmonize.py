"""Segment-wise chroma harmonization.

Inside each segment, a*/b* values farther than ``delta`` from the segment's
mode are replaced by the mode. Segments come from an external segmenter as
boolean masks; which segments to pass is up to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SegmentMaskSet:
    masks: list
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.masks = [np.asarray(m, dtype=bool) for m in self.masks]
        if not self.masks:
            raise ValueError("no masks given")
        shape = self.masks[0].shape
        for i, m in enumerate(self.masks):
            if m.ndim != 2 or m.shape != shape:
                raise ValueError(f"mask {i} has shape {m.shape}, expected {shape}")
            if not m.any():
                raise ValueError(f"mask {i} is empty")
        if self.labels and len(self.labels) != len(self.masks):
            raise ValueError("labels and masks differ in length")

    @property
    def shape(self) -> tuple:
        return self.masks[0].shape

    def overlapping(self) -> bool:
        return bool((np.sum(self.masks, axis=0) > 1).any())

    @classmethod
    def from_label_image(cls, labels: np.ndarray) -> "SegmentMaskSet":
        """One segment per nonzero label value, in ascending label order."""
        labels = np.asarray(labels)
        values = [v for v in np.unique(labels) if v != 0]
        return cls([labels == v for v in values], [str(int(v)) for v in values])


@dataclass(frozen=True)
class HarmonizeParams:
    delta_a: float = 8.0
    delta_b: float = 8.0

    def __post_init__(self):
        if self.delta_a < 0 or self.delta_b < 0:
            raise ValueError("deltas must be >= 0")


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def segment_mode(plane: np.ndarray, mask: np.ndarray) -> float:
    """Most frequent integer-rounded value under ``mask``; ties go to the smaller value."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    values, counts = np.unique(round_half_up(np.asarray(plane)[mask]), return_counts=True)
    return float(values[np.argmax(counts)])


def harmonize(ab: np.ndarray, masks: SegmentMaskSet, params: HarmonizeParams = HarmonizeParams()) -> np.ndarray:
    """Return harmonized copy of a*b* planes ``(H, W, 2)``.

    Masks are applied in order, so with overlapping masks later segments see
    the replacements made by earlier ones.
    """
    out = np.array(ab, dtype=np.float64, copy=True)
    if out.shape != masks.shape + (2,):
        raise ValueError(f"a*b* shape {out.shape} does not match masks {masks.shape}")
    for mask in masks.masks:
        for ch, delta in ((0, params.delta_a), (1, params.delta_b)):
            plane = out[..., ch]
            mode = segment_mode(plane, mask)
            outlier = mask & (np.abs(plane - mode) > delta)
            plane[outlier] = mode
    return out


def diff_report(before: np.ndarray, after: np.ndarray, masks: SegmentMaskSet) -> dict:
    """Per-segment count of replaced values, for auditing a harmonization run."""
    changed = before != after
    segments = []
    for i, m in enumerate(masks.masks):
        segments.append(
            {
                "index": i,
                "label": masks.labels[i] if masks.labels else str(i),
                "pixels": int(m.sum()),
                "changed_a": int((changed[..., 0] & m).sum()),
                "changed_b": int((changed[..., 1] & m).sum()),
            }
        )
    return {
        "changed_a": int(changed[..., 0].sum()),
        "changed_b": int(changed[..., 1].sum()),
        "max_abs_change": float(np.abs(after - before).max()) if before.size else 0.0,
        "overlapping_masks": masks.overlapping(),
        "segments": segments,
    }
