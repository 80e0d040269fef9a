"""sRGB (8-bit) <-> CIE 1976 L*a*b* conversion under the D65 white point.

Images are plain numpy arrays with the channel on the last axis:
``uint8`` ``(..., 3)`` for RGB and ``float64`` ``(..., 3)`` for Lab.
All arithmetic is done in double precision; quantization to 8 bits happens
only when leaving Lab.
"""

from __future__ import annotations

import numpy as np

# sRGB primaries -> XYZ, D65 (Lindbloom, 7 decimals).
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ],
    dtype=np.float64,
)
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)

# D65 reference white taken as the image of RGB (1, 1, 1), so that sRGB
# white lands on L=100, a=b=0 and grays stay on the neutral axis.
# Matches the usual (0.95047, 1.00000, 1.08883) to 5 decimals.
D65_WHITE = RGB_TO_XYZ.sum(axis=1)

_EPSILON = 216.0 / 24389.0  # (6/29)**3
_KAPPA = 24389.0 / 27.0


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    """Undo the sRGB transfer curve. ``c`` in [0, 1]."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    c = np.clip(np.asarray(c, dtype=np.float64), 0.0, 1.0)
    return np.where(c <= 0.0031308, c * 12.92, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _EPSILON, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)


def _f_inv(t: np.ndarray) -> np.ndarray:
    t3 = t**3
    return np.where(t3 > _EPSILON, t3, (116.0 * t - 16.0) / _KAPPA)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert 8-bit sRGB ``(..., 3)`` to float64 Lab ``(..., 3)``."""
    rgb = np.asarray(rgb)
    if rgb.shape[-1] != 3:
        raise ValueError(f"expected trailing channel axis of size 3, got {rgb.shape}")
    lin = srgb_to_linear(rgb.astype(np.float64) / 255.0)
    xyz = lin @ RGB_TO_XYZ.T
    fx, fy, fz = (_f(xyz[..., i] / D65_WHITE[i]) for i in range(3))
    L = np.clip(116.0 * fy - 16.0, 0.0, 100.0)
    a = 500.0 * (fx - fy)
    b = 200.0 * (fy - fz)
    return np.stack([L, a, b], axis=-1)


def lab_to_rgb_float(lab: np.ndarray) -> np.ndarray:
    """Lab -> sRGB in [0, 255] as float, clamped per channel but not rounded."""
    lab = np.asarray(lab, dtype=np.float64)
    if lab.shape[-1] != 3:
        raise ValueError(f"expected trailing channel axis of size 3, got {lab.shape}")
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_f_inv(fx), _f_inv(fy), _f_inv(fz)], axis=-1) * D65_WHITE
    lin = xyz @ XYZ_TO_RGB.T
    return linear_to_srgb(lin) * 255.0


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Convert Lab ``(..., 3)`` to 8-bit sRGB; out-of-gamut channels are clamped."""
    return np.floor(lab_to_rgb_float(lab) + 0.5).astype(np.uint8)


def gray_to_lightness(gray: np.ndarray) -> np.ndarray:
    """L plane of an 8-bit grayscale image (r = g = b = gray)."""
    gray = np.asarray(gray)
    return rgb_to_lab(np.repeat(gray[..., None], 3, axis=-1))[..., 0]


def compose_lab(lightness: np.ndarray, ab: np.ndarray) -> np.ndarray:
    """Stack an L plane ``(H, W)`` with a*b* planes ``(H, W, 2)``."""
    lightness = np.asarray(lightness, dtype=np.float64)
    ab = np.asarray(ab, dtype=np.float64)
    if ab.shape != lightness.shape + (2,):
        raise ValueError(f"shape mismatch: L {lightness.shape} vs ab {ab.shape}")
    return np.concatenate([lightness[..., None], ab], axis=-1)
