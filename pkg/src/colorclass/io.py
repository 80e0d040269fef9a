"""File formats: images, class maps, a*b* planes, masks and JSON artifacts.

Class maps are 16-bit grayscale PNGs with a JSON sidecar (``x.png`` ->
``x.json``) recording the grid. a*b* planes are stored as a pair of 16-bit
PNGs (``<prefix>_a.png``, ``<prefix>_b.png``) holding ``round(100 * v) + 32768``.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .classgrid import ClassMap, GridParams
from .classopt import ApprovedClassSet, ClassHistogram
from .harmonize import SegmentMaskSet

SCHEMA_VERSION = 1
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}
AB_SCALE = 100.0
AB_OFFSET = 32768


class FormatError(ValueError):
    """Artifact file is malformed or inconsistent with the expected grid."""


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _check_schema(d: dict, kind: str, path) -> None:
    if d.get("kind") != kind:
        raise FormatError(f"{path}: expected a {kind!r} file, got {d.get('kind')!r}")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {d.get('schema_version')!r}")


def check_grid(found: GridParams, expected: GridParams | None, what) -> None:
    if expected is not None and found != expected:
        raise FormatError(f"{what}: grid {found.to_dict()} does not match expected {expected.to_dict()}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- images ---------------------------------------------------------------


def read_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_rgb(path, rgb: np.ndarray) -> None:
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path)


def read_gray(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def write_png16(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 0xFFFF:
        raise ValueError("values do not fit in 16 bits")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def read_png16(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im).astype(np.int64)


def resize_plane(plane: np.ndarray, size: tuple) -> np.ndarray:
    """Area-average a float plane to ``(height, width)``."""
    h, w = size
    im = Image.fromarray(np.asarray(plane, dtype=np.float32), mode="F")
    return np.asarray(im.resize((w, h), Image.BOX), dtype=np.float64)


def resize_nearest(classes: np.ndarray, size: tuple) -> np.ndarray:
    """Nearest-neighbor resize for index maps; indices are never interpolated."""
    h, w = size
    rows = (np.arange(h) * classes.shape[0]) // h
    cols = (np.arange(w) * classes.shape[1]) // w
    return classes[np.ix_(rows, cols)]


# -- class maps -----------------------------------------------------------


def sidecar_path(png_path) -> Path:
    return Path(png_path).with_suffix(".json")


def save_classmap(path, m: ClassMap) -> None:
    write_png16(path, m.classes)
    write_json(
        sidecar_path(path),
        {
            "kind": "classmap",
            "schema_version": SCHEMA_VERSION,
            **m.grid.to_dict(),
            "compacted": m.compacted,
            "approved_set_hash": m.approved_hash,
            "n_dense": m.n_dense,
        },
    )


def is_classmap(path) -> bool:
    side = sidecar_path(path)
    if Path(path).suffix.lower() != ".png" or not side.exists():
        return False
    try:
        return read_json(side).get("kind") == "classmap"
    except (OSError, json.JSONDecodeError):
        return False


def load_classmap(path, grid: GridParams | None = None) -> ClassMap:
    meta = read_json(sidecar_path(path))
    _check_schema(meta, "classmap", path)
    found = GridParams.from_dict(meta)
    check_grid(found, grid, path)
    return ClassMap(read_png16(path), found, meta.get("approved_set_hash"), meta.get("n_dense"))


# -- a*b* planes ----------------------------------------------------------


def save_ab(prefix, ab: np.ndarray) -> tuple[Path, Path]:
    ab = np.asarray(ab, dtype=np.float64)
    paths = (Path(f"{prefix}_a.png"), Path(f"{prefix}_b.png"))
    for ch, p in enumerate(paths):
        write_png16(p, np.floor(ab[..., ch] * AB_SCALE + 0.5).astype(np.int64) + AB_OFFSET)
    return paths


def load_ab(prefix) -> np.ndarray:
    a = read_png16(f"{prefix}_a.png")
    b = read_png16(f"{prefix}_b.png")
    if a.shape != b.shape:
        raise FormatError(f"{prefix}: a and b planes differ in shape")
    return (np.stack([a, b], axis=-1).astype(np.float64) - AB_OFFSET) / AB_SCALE


# -- masks ----------------------------------------------------------------


def load_mask_dir(directory) -> SegmentMaskSet:
    """One 8-bit PNG per segment (nonzero = member), in filename order."""
    files = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise FormatError(f"{directory}: no mask PNGs")
    masks = []
    for p in files:
        with Image.open(p) as im:
            masks.append(np.asarray(im.convert("L")) != 0)
    return SegmentMaskSet(masks, [p.stem for p in files])


def load_label_png(path) -> SegmentMaskSet:
    """A single labeled PNG; each nonzero value is one segment, 0 is unlabeled."""
    return SegmentMaskSet.from_label_image(read_png16(path))


# -- histogram / approved set / weights -----------------------------------


def histogram_to_dict(h: ClassHistogram, config_hash: str | None = None, n_files: int | None = None) -> dict:
    return {
        "kind": "class_histogram",
        "schema_version": SCHEMA_VERSION,
        "grid": h.grid.to_dict(),
        "config_hash": config_hash,
        "n_files": n_files,
        "total_samples": h.total_samples,
        "counts": h.counts.tolist(),
    }


def histogram_from_dict(d: dict, grid: GridParams | None = None, what="histogram") -> ClassHistogram:
    _check_schema(d, "class_histogram", what)
    found = GridParams.from_dict(d["grid"])
    check_grid(found, grid, what)
    h = ClassHistogram(found, d["counts"])
    if h.total_samples != d["total_samples"]:
        raise FormatError(f"{what}: counts do not sum to total_samples")
    return h


def approved_to_dict(s: ApprovedClassSet, config_hash: str | None = None) -> dict:
    return {
        "kind": "approved_class_set",
        "schema_version": SCHEMA_VERSION,
        "grid": s.grid.to_dict(),
        "config_hash": config_hash,
        "hash": s.hash,
        "min_count_threshold": s.min_count_threshold,
        "n_approved": s.n_classes,
        "approved": s.approved.tolist(),
        "remap": s.remap.tolist(),
    }


def approved_from_dict(d: dict, grid: GridParams | None = None, what="approved set") -> ApprovedClassSet:
    _check_schema(d, "approved_class_set", what)
    found = GridParams.from_dict(d["grid"])
    check_grid(found, grid, what)
    s = ApprovedClassSet(found, d["approved"], d["remap"], d["min_count_threshold"])
    if d.get("hash") not in (None, s.hash):
        raise FormatError(f"{what}: stored hash does not match contents")
    return s


# -- corpus manifest ------------------------------------------------------


def build_manifest(root) -> dict:
    """Sorted list of image files under ``root`` with checksums.

    The split tag is the first directory below ``root`` (``"all"`` for files
    directly in it).
    """
    root = Path(root)
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    entries = []
    for p in files:
        rel = p.relative_to(root)
        entries.append(
            {
                "path": rel.as_posix(),
                "split": rel.parts[0] if len(rel.parts) > 1 else "all",
                "sha256": sha256_file(p),
            }
        )
    return {"kind": "manifest", "schema_version": SCHEMA_VERSION, "root": str(root), "files": entries}


def load_manifest(path) -> dict:
    """Manifest from a JSON file, or built on the fly from a directory."""
    path = Path(path)
    if path.is_dir():
        return build_manifest(path)
    d = read_json(path)
    _check_schema(d, "manifest", path)
    root = Path(d["root"])
    if not root.is_absolute():
        d["root"] = str((path.parent / root).resolve())
    return d
