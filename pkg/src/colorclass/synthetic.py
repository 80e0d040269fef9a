"""Synthetic corpora with planted color frequencies, for demos and tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import io

# Saturated and muted colors spread over the a*b* plane.
DEFAULT_PALETTE = np.array(
    [
        [128, 128, 128],
        [200, 200, 190],
        [90, 110, 140],
        [120, 160, 90],
        [210, 40, 40],
        [40, 90, 220],
        [240, 200, 30],
        [30, 180, 170],
        [170, 60, 190],
        [250, 140, 20],
    ],
    dtype=np.uint8,
)
DEFAULT_WEIGHTS = np.array([30, 20, 15, 12, 6, 5, 4, 3, 3, 2], dtype=np.float64)


def blocky_image(rng, size=(64, 64), palette=DEFAULT_PALETTE, weights=DEFAULT_WEIGHTS, n_rects=6):
    """Background color plus random rectangles; returns (rgb, label map of rectangles)."""
    h, w = size
    p = weights / weights.sum()
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = palette[rng.choice(len(palette), p=p)]
    labels = np.zeros((h, w), dtype=np.int64)
    for k in range(1, n_rects + 1):
        y0, x0 = rng.integers(0, h - 8), rng.integers(0, w - 8)
        y1, x1 = y0 + rng.integers(6, h // 2), x0 + rng.integers(6, w // 2)
        img[y0:y1, x0:x1] = palette[rng.choice(len(palette), p=p)]
        labels[y0:y1, x0:x1] = k
    return img, labels


def add_noise(rgb, rng, sigma=6.0, frac=0.05):
    """Gaussian jitter on every pixel plus a fraction of random-color outliers."""
    out = rgb.astype(np.float64) + rng.normal(0, sigma, size=rgb.shape)
    spots = rng.random(rgb.shape[:2]) < frac
    out[spots] = rng.integers(0, 256, size=(int(spots.sum()), 3))
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def make_corpus(out_dir, n_images=40, size=(64, 64), seed=0) -> list[Path]:
    """Write ``n_images`` PNGs to ``out_dir``; deterministic in ``seed``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(n_images):
        img, _ = blocky_image(rng, size)
        p = out_dir / f"img_{i:04d}.png"
        io.write_rgb(p, add_noise(img, rng, sigma=2.0, frac=0.002))
        paths.append(p)
    return paths


def planted_class_maps(grid, planted: dict, n_maps: int, rng) -> list[np.ndarray]:
    """Class maps whose pooled histogram equals ``planted`` exactly, pixels shuffled."""
    pixels = np.concatenate([np.full(n, c, dtype=np.int64) for c, n in sorted(planted.items())])
    rng.shuffle(pixels)
    chunks = np.array_split(pixels, n_maps)
    return [c.reshape(1, -1) for c in chunks]
