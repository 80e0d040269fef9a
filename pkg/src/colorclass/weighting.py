"""Per-batch class weights, weighted cross-entropy and related utilities.

Class scores carry the class on the last axis, e.g. ``(B, H, W, n)``; the
matching target maps hold dense class indices with shape ``(B, H, W)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12


@dataclass
class BatchStats:
    counts: np.ndarray
    batch_shape: tuple = ()

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.float64)
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @classmethod
    def from_targets(cls, targets: np.ndarray, n_classes: int) -> "BatchStats":
        targets = np.asarray(targets)
        counts = np.bincount(targets.ravel(), minlength=n_classes)
        if len(counts) > n_classes:
            raise ValueError(f"target index >= n_classes ({n_classes})")
        return cls(counts, tuple(targets.shape))


@dataclass
class WeightTable:
    weights: np.ndarray
    psi: float | None = None
    p_percent: float | None = None
    batch_shape: tuple = ()

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not (np.isfinite(self.weights).all() and (self.weights > 0).all()):
            raise ValueError("weights must be positive and finite")

    def to_dict(self) -> dict:
        return {
            "psi": self.psi,
            "p_percent": self.p_percent,
            "batch_shape": list(self.batch_shape),
            "weights": {str(i): float(w) for i, w in enumerate(self.weights)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeightTable":
        w = d["weights"]
        weights = [w[str(i)] for i in range(len(w))]
        return cls(weights, d.get("psi"), d.get("p_percent"), tuple(d.get("batch_shape", ())))


def uniform_weights(n_classes: int) -> WeightTable:
    if n_classes < 1:
        raise ValueError("n_classes must be >= 1")
    return WeightTable(np.full(n_classes, 1.0 / n_classes))


def psi_threshold(total: float, n_classes: int, p_percent: float) -> float:
    """Minimum effective class count: the average class count times ``p_percent`` %."""
    return total / n_classes * p_percent / 100.0


def batch_weights(stats: BatchStats, p_percent: float = 10.0, psi: float | None = None) -> WeightTable:
    """Class-confusion weights for one batch.

    Counts below the threshold ``psi`` are raised to it, then every class gets
    ``total / (adjusted_count + max_count / psi)``. ``psi`` is derived from
    ``p_percent`` unless given explicitly.
    """
    total = stats.total
    if total <= 0:
        raise ValueError("batch has no samples")
    if psi is None:
        if p_percent <= 0:
            raise ValueError("p_percent must be positive")
        psi = psi_threshold(total, stats.n_classes, p_percent)
    elif psi <= 0:
        raise ValueError("psi must be positive")
    adjusted = np.maximum(stats.counts, psi)
    weights = total / (adjusted + stats.counts.max() / psi)
    return WeightTable(weights, float(psi), p_percent, stats.batch_shape)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def argmax_classes(probs: np.ndarray) -> np.ndarray:
    """Index of the largest score on the last axis; ties go to the smallest index."""
    return np.argmax(probs, axis=-1)


def _picked(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets)
    if probs.shape[:-1] != targets.shape:
        raise ValueError(f"shape mismatch: probs {probs.shape} vs targets {targets.shape}")
    return np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]


def _reduce(per_pixel: np.ndarray, reduction: str) -> float:
    # fsum: result independent of summation order.
    total = math.fsum(per_pixel.ravel().tolist())
    if reduction == "sum":
        return total
    if reduction == "mean":
        return total / per_pixel.size
    raise ValueError(f"unknown reduction {reduction!r}")


def weighted_ce_loss(probs, targets, weights: WeightTable, reduction: str = "mean", eps: float = PROB_FLOOR) -> float:
    """``-sum w[t] log p[t]`` over pixels, summed or averaged."""
    p = _picked(probs, targets)
    w = weights.weights[np.asarray(targets)]
    return _reduce(-w * np.log(np.maximum(p, eps)), reduction)


def weighted_ce_grad_probs(probs, targets, weights: WeightTable, reduction: str = "mean", eps: float = PROB_FLOOR) -> np.ndarray:
    """Gradient of :func:`weighted_ce_loss` with respect to ``probs``."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets)
    p = _picked(probs, targets)
    w = weights.weights[targets]
    g_pick = np.where(p > eps, -w / np.maximum(p, eps), 0.0)
    grad = np.zeros_like(probs)
    np.put_along_axis(grad, targets[..., None], g_pick[..., None], axis=-1)
    return grad / targets.size if reduction == "mean" else grad


def weighted_ce_from_logits(logits, targets, weights: WeightTable, reduction: str = "mean") -> float:
    """Weighted cross-entropy of ``softmax(logits)`` computed via log-sum-exp."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    w = weights.weights[np.asarray(targets)]
    return _reduce(-w * _picked(log_p, targets), reduction)


def weighted_ce_grad_logits(logits, targets, weights: WeightTable, reduction: str = "mean") -> np.ndarray:
    """Gradient through softmax: ``w[t] * (softmax(z) - onehot(t))``."""
    targets = np.asarray(targets)
    p = softmax(logits)
    onehot = np.zeros_like(p)
    np.put_along_axis(onehot, targets[..., None], 1.0, axis=-1)
    grad = weights.weights[targets][..., None] * (p - onehot)
    return grad / targets.size if reduction == "mean" else grad


def log_cosh(x: np.ndarray) -> np.ndarray:
    ax = np.abs(np.asarray(x, dtype=np.float64))
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


def regression_losses(pred_ab, true_ab, huber_delta: float = 1.0) -> dict:
    """L1, L2, Huber and log-cosh losses averaged over every a*b* value."""
    pred = np.asarray(pred_ab, dtype=np.float64)
    true = np.asarray(true_ab, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    if huber_delta <= 0:
        raise ValueError("huber_delta must be positive")
    e = true - pred
    ae = np.abs(e)
    huber = np.where(ae < huber_delta, 0.5 * e**2, huber_delta * (ae - 0.5 * huber_delta))
    return {
        "l1": float(ae.mean()),
        "l2": float((e**2).mean()),
        "huber": float(huber.mean()),
        "log_cosh": float(log_cosh(e).mean()),
    }
