"""Class-diversity metrics (CNR, CCAR, TAR) and MSE/PSNR."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .classgrid import ClassMap


def _classes(m) -> np.ndarray:
    return m.classes if isinstance(m, ClassMap) else np.asarray(m)


def unique_classes(m) -> int:
    return int(np.unique(_classes(m)).size)


def cnr(pred, truth) -> float:
    """Chromatic number ratio: distinct classes in ``pred`` over those in ``truth``."""
    if _classes(truth).size == 0:
        raise ValueError("ground-truth map has no pixels")
    return unique_classes(pred) / unique_classes(truth)


def ccar(pred, n_class: int) -> dict:
    """Color class activation: distinct classes in ``pred``, raw and as a fraction of ``n_class``."""
    if n_class < 1:
        raise ValueError("n_class must be >= 1")
    raw = unique_classes(pred)
    return {"raw": raw, "ratio": raw / n_class}


def pixel_accuracy(pred, truth) -> float:
    p, t = _classes(pred), _classes(truth)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty map")
    return float(np.count_nonzero(p == t)) / p.size


def tar(preds, truths, percent: bool = True) -> float:
    """True activation ratio: mean per-image exact-class pixel accuracy."""
    preds, truths = list(preds), list(truths)
    if len(preds) != len(truths):
        raise ValueError(f"{len(preds)} predictions vs {len(truths)} ground truths")
    if not preds:
        raise ValueError("no images")
    acc = float(np.mean([pixel_accuracy(p, t) for p, t in zip(preds, truths)]))
    return 100.0 * acc if percent else acc


def mse_psnr(pred, truth, data_range: float | None = None) -> dict:
    """MSE on values scaled to [0, 1] and PSNR = 10 log10(1 / mse).

    ``data_range`` defaults to 255 for uint8 input and 1 otherwise. Identical
    inputs give ``psnr = inf``.
    """
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if data_range is None:
        data_range = 255.0 if pred.dtype == np.uint8 else 1.0
    diff = (pred.astype(np.float64) - truth.astype(np.float64)) / data_range
    mse = float(np.mean(diff**2))
    psnr = float("inf") if mse == 0 else 10.0 * np.log10(1.0 / mse)
    return {"mse": mse, "psnr": psnr}


@dataclass
class MetricsReport:
    name: str
    cnr: float
    ccar_raw: int
    ccar_ratio: float
    tar_percent: float
    mse: float | None = None
    psnr: float | None = None

    def as_row(self) -> dict:
        return asdict(self)


def evaluate_pair(name: str, pred: ClassMap, truth: ClassMap, n_class: int, pred_rgb=None, truth_rgb=None) -> MetricsReport:
    c = ccar(pred, n_class)
    mp = mse_psnr(pred_rgb, truth_rgb) if pred_rgb is not None else {"mse": None, "psnr": None}
    return MetricsReport(
        name=name,
        cnr=cnr(pred, truth),
        ccar_raw=c["raw"],
        ccar_ratio=c["ratio"],
        tar_percent=100.0 * pixel_accuracy(pred, truth),
        mse=mp["mse"],
        psnr=mp["psnr"],
    )


def corpus_summary(reports: list[MetricsReport]) -> dict:
    """Means over images, in list order."""
    if not reports:
        raise ValueError("no reports")
    out = {"n_images": len(reports)}
    for key in ("cnr", "ccar_raw", "ccar_ratio", "tar_percent", "mse", "psnr"):
        vals = [getattr(r, key) for r in reports]
        if any(v is None for v in vals):
            out[key] = None
        else:
            out[key] = float(np.mean(vals))
    return out
