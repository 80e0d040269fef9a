"""Command-line interface.

Exit codes: 0 success, 1 partial failure (a report is still written),
2 invalid invocation or unusable input.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .classgrid import VALIDATED_ALPHAS, ClassMap, bin_table, decode_map, encode_ab, encode_image, make_grid, rgb_deviation_sweep
from .classopt import ClassHistogram, compact_map, expand_map, select_classes, threshold_from_percent
from .colorspace import compose_lab, gray_to_lightness, lab_to_rgb, rgb_to_lab
from .config import PipelineConfig
from .harmonize import HarmonizeParams, diff_report, harmonize
from .metrics import MetricsReport, corpus_summary, evaluate_pair
from .weighting import BatchStats, batch_weights

log = logging.getLogger("colorclass")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2
ENV_CORPUS = "COLORCLASS_CORPUS"
ENV_APPROVED = "COLORCLASS_APPROVED"


class UsageError(Exception):
    pass


# -- analyze-bins ---------------------------------------------------------


def analyze_bins(alphas=VALIDATED_ALPHAS, rgb_sweep: bool = False) -> list[dict]:
    rows = []
    for row in bin_table(alphas):
        d = {
            "alpha": row.alpha,
            "total_class_points": row.total_class_points,
            "max_dev_ab": row.max_dev_ab,
            "avg_dev_ab": row.avg_dev_ab,
        }
        if rgb_sweep:
            sweep = rgb_deviation_sweep(make_grid(row.alpha))
            for c, (mx, avg) in sweep.items():
                d[f"rgb_max_dev_ab{c}"] = round(mx, 4)
                d[f"rgb_avg_dev_ab{c}"] = round(avg, 4)
        rows.append(d)
    return rows


def cmd_analyze_bins(args) -> int:
    if not args.alphas:
        raise UsageError("need at least one alpha")
    rows = analyze_bins(args.alphas, args.rgb_sweep)
    if args.out:
        out = Path(args.out)
        if out.suffix.lower() == ".csv":
            with open(out, "w", newline="") as f:
                w = csv.DictWriter(f, fieldnames=list(rows[0]))
                w.writeheader()
                w.writerows(rows)
        else:
            io.write_json(out, {"kind": "bin_analysis", "schema_version": io.SCHEMA_VERSION, "rows": rows})
    for r in rows:
        print(" ".join(f"{k}={v}" for k, v in r.items()))
    return EXIT_OK


# -- build-histogram ------------------------------------------------------


def file_class_counts(path: str, alpha: int, resize) -> np.ndarray:
    """Class counts of one corpus file (an RGB image or a class-map PNG)."""
    grid = make_grid(alpha)
    if io.is_classmap(path):
        classes = io.load_classmap(path, grid).classes
        if resize is not None:
            classes = io.resize_nearest(classes, resize)
    else:
        lab = rgb_to_lab(io.read_rgb(path))
        a, b = lab[..., 1], lab[..., 2]
        if resize is not None:
            a, b = io.resize_plane(a, resize), io.resize_plane(b, resize)
        classes = encode_ab(a, b, grid)
    return np.bincount(classes.ravel(), minlength=grid.n_classes)


def _safe_counts(job):
    path, alpha, resize = job
    try:
        return file_class_counts(path, alpha, resize), None
    except Exception as exc:  # noqa: BLE001 - reported per file
        return None, f"{type(exc).__name__}: {exc}"


def build_histogram(manifest: dict, config: PipelineConfig, workers: int = 1):
    root = Path(manifest["root"])
    paths = [str(root / e["path"]) for e in manifest["files"]]
    if not paths:
        raise UsageError("corpus manifest is empty")
    jobs = [(p, config.alpha, config.histogram_resize) for p in paths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_safe_counts, jobs, chunksize=4))
    else:
        results = [_safe_counts(j) for j in jobs]
    h = ClassHistogram(config.grid)
    failed = []
    for (path, _, _), (counts, err) in zip(jobs, results):
        if err is None:
            h.counts += counts
        else:
            failed.append({"path": path, "error": err})
    return h, failed


def cmd_build_histogram(args, config: PipelineConfig) -> int:
    corpus = args.corpus or os.environ.get(ENV_CORPUS)
    if not corpus:
        raise UsageError(f"no corpus given (argument or ${ENV_CORPUS})")
    try:
        manifest = io.load_manifest(corpus)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read corpus {corpus}: {exc}") from exc
    h, failed = build_histogram(manifest, config, args.workers)
    n_ok = len(manifest["files"]) - len(failed)
    io.write_json(args.out, io.histogram_to_dict(h, config.hash, n_ok))
    for f in failed:
        log.error("unreadable: %s (%s)", f["path"], f["error"])
    print(f"files={len(manifest['files'])} failed={len(failed)} samples={h.total_samples} nonzero_classes={int((h.counts > 0).sum())}")
    if failed and n_ok == 0:
        return EXIT_USAGE
    return EXIT_PARTIAL if failed else EXIT_OK


# -- optimize-classes -----------------------------------------------------


def cmd_optimize_classes(args, config: PipelineConfig) -> int:
    h = io.histogram_from_dict(io.read_json(args.histogram), config.grid, args.histogram)
    if config.min_percent is not None:
        min_count = threshold_from_percent(h.total_samples, config.min_percent)
    else:
        min_count = config.min_count
    s = select_classes(h, min_count)
    io.write_json(args.out, io.approved_to_dict(s, config.hash))
    print(f"approved={s.n_classes} of {h.grid.n_classes} min_count={min_count} hash={s.hash}")
    return EXIT_OK


# -- weights --------------------------------------------------------------


def _load_approved(path, grid):
    path = path or os.environ.get(ENV_APPROVED)
    if not path:
        raise UsageError(f"an approved class set is required (--approved or ${ENV_APPROVED})")
    try:
        return io.approved_from_dict(io.read_json(path), grid, path)
    except OSError as exc:
        raise UsageError(f"cannot read approved set {path}: {exc}") from exc


def dense_targets(maps: list[ClassMap], approved) -> np.ndarray:
    out = []
    for m in maps:
        if m.compacted:
            if m.approved_hash != approved.hash:
                raise io.FormatError("compacted class map uses a different approved set")
            out.append(m.classes)
        else:
            out.append(compact_map(m, approved).classes)
    return out


def cmd_weights(args, config: PipelineConfig) -> int:
    approved = _load_approved(args.approved, config.grid)
    if not args.classmaps:
        raise UsageError("no class-map files given")
    maps = [io.load_classmap(p, config.grid) for p in args.classmaps]
    targets = dense_targets(maps, approved)
    counts = sum(np.bincount(t.ravel(), minlength=approved.n_classes) for t in targets)
    shape = (len(targets),) + targets[0].shape if len({t.shape for t in targets}) == 1 else (int(counts.sum()),)
    table = batch_weights(BatchStats(counts, shape), config.p_percent, config.psi_override)
    io.write_json(
        args.out,
        {
            "kind": "weight_table",
            "schema_version": io.SCHEMA_VERSION,
            "grid": config.grid.to_dict(),
            "approved_set_hash": approved.hash,
            "n_classes": approved.n_classes,
            "config_hash": config.hash,
            "counts": counts.tolist(),
            **table.to_dict(),
        },
    )
    print(f"n_classes={approved.n_classes} psi={table.psi:.6g} w_min={table.weights.min():.6g} w_max={table.weights.max():.6g}")
    return EXIT_OK


# -- harmonize ------------------------------------------------------------


def _load_ab_input(args, config):
    given = [x for x in (args.image, args.ab_prefix, args.classmap) if x]
    if len(given) != 1:
        raise UsageError("give exactly one of --image, --ab-prefix, --classmap")
    if args.image:
        lab = rgb_to_lab(io.read_rgb(args.image))
        return lab[..., 1:], lab[..., 0]
    if args.ab_prefix:
        return io.load_ab(args.ab_prefix), None
    m = io.load_classmap(args.classmap, config.grid)
    if m.compacted:
        m = expand_map(m, _load_approved(args.approved, config.grid))
    return decode_map(m), None


def cmd_harmonize(args, config: PipelineConfig) -> int:
    ab, lightness = _load_ab_input(args, config)
    if bool(args.masks) == bool(args.labels):
        raise UsageError("give exactly one of --masks DIR or --labels PNG")
    masks = io.load_mask_dir(args.masks) if args.masks else io.load_label_png(args.labels)
    if masks.shape != ab.shape[:2]:
        raise UsageError(f"mask size {masks.shape} does not match a*b* size {ab.shape[:2]}")
    out = harmonize(ab, masks, HarmonizeParams(config.delta_a, config.delta_b))
    io.save_ab(args.out_prefix, out)
    report = diff_report(ab, out, masks)
    report.update({"delta_a": config.delta_a, "delta_b": config.delta_b, "config_hash": config.hash})
    if args.gray:
        lightness = gray_to_lightness(io.read_gray(args.gray))
    if lightness is not None:
        io.write_rgb(f"{args.out_prefix}_rgb.png", lab_to_rgb(compose_lab(lightness, out)))
    io.write_json(f"{args.out_prefix}_report.json", report)
    print(f"segments={len(masks.masks)} changed_a={report['changed_a']} changed_b={report['changed_b']}")
    return EXIT_OK


# -- evaluate -------------------------------------------------------------


def _load_for_eval(path, grid, approved):
    """(class map in the metric domain, rgb or None)."""
    if io.is_classmap(path):
        m, rgb = io.load_classmap(path, grid), None
        if m.compacted and approved is None:
            raise io.FormatError(f"{path}: compacted map needs --approved")
        if m.compacted:
            m = expand_map(m, approved)
    else:
        rgb = io.read_rgb(path)
        m = encode_image(rgb_to_lab(rgb), grid)
    if approved is not None:
        m = compact_map(m, approved)
    return m, rgb


def _eval_files(directory) -> dict:
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"not a directory: {directory}")
    return {p.name: p for p in sorted(d.iterdir()) if p.suffix.lower() in io.IMAGE_SUFFIXES}


def evaluate_dirs(pred_dir, truth_dir, config: PipelineConfig, approved=None):
    grid = config.grid
    n_class = approved.n_classes if approved is not None else grid.n_classes
    preds, truths = _eval_files(pred_dir), _eval_files(truth_dir)
    if not truths:
        raise UsageError(f"no images in {truth_dir}")
    reports, errors = [], []
    for name in sorted(set(preds) | set(truths)):
        if name not in preds or name not in truths:
            errors.append({"name": name, "error": "missing counterpart"})
            continue
        try:
            pm, prgb = _load_for_eval(preds[name], grid, approved)
            tm, trgb = _load_for_eval(truths[name], grid, approved)
            if pm.classes.shape != tm.classes.shape:
                raise ValueError(f"size mismatch {pm.classes.shape} vs {tm.classes.shape}")
            with_rgb = prgb is not None and trgb is not None
            reports.append(evaluate_pair(name, pm, tm, n_class, prgb if with_rgb else None, trgb if with_rgb else None))
        except Exception as exc:  # noqa: BLE001 - reported per file
            errors.append({"name": name, "error": f"{type(exc).__name__}: {exc}"})
    return reports, errors, n_class


def cmd_evaluate(args, config: PipelineConfig) -> int:
    approved = _load_approved(args.approved, config.grid) if args.approved else None
    reports, errors, n_class = evaluate_dirs(args.pred_dir, args.truth_dir, config, approved)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fields = list(MetricsReport.__dataclass_fields__) + ["error"]
    with open(out / "per_image.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields)
        w.writeheader()
        rows = [r.as_row() | {"error": ""} for r in reports] + errors
        for row in sorted(rows, key=lambda r: r["name"]):
            w.writerow(row)
    summary = corpus_summary(reports) if reports else {"n_images": 0}
    if args.tar_fraction and summary.get("tar_percent") is not None:
        summary["tar_fraction"] = summary["tar_percent"] / 100.0
    summary.update(
        {
            "kind": "metrics_summary",
            "schema_version": io.SCHEMA_VERSION,
            "grid": config.grid.to_dict(),
            "metric_domain": "approved" if approved is not None else "full_grid",
            "approved_set_hash": approved.hash if approved is not None else None,
            "n_class": n_class,
            "n_errors": len(errors),
            "config_hash": config.hash,
        }
    )
    if summary.get("psnr") is not None and math.isinf(summary["psnr"]):
        summary["psnr"] = "inf"
    io.write_json(out / "summary.json", summary)
    print(json.dumps({k: summary[k] for k in ("n_images", "n_errors") if k in summary}))
    if not reports:
        return EXIT_USAGE
    return EXIT_PARTIAL if errors else EXIT_OK


# -- roundtrip ------------------------------------------------------------


def roundtrip_report(rgb: np.ndarray, config: PipelineConfig) -> dict:
    lab = rgb_to_lab(rgb)
    m = encode_image(lab, config.grid)
    dev = np.abs(decode_map(m) - lab[..., 1:])
    back = lab_to_rgb(compose_lab(lab[..., 0], decode_map(m)))
    rgb_dev = np.abs(back.astype(np.int64) - rgb.astype(np.int64))
    return {
        "grid": config.grid.to_dict(),
        "config_hash": config.hash,
        "pixels": int(m.classes.size),
        "distinct_classes": int(np.unique(m.classes).size),
        "max_dev_a": round(float(dev[..., 0].max()), 9),
        "max_dev_b": round(float(dev[..., 1].max()), 9),
        "mean_dev_a": round(float(dev[..., 0].mean()), 9),
        "mean_dev_b": round(float(dev[..., 1].mean()), 9),
        "bound": config.alpha / 2,
        "rgb_max_dev": int(rgb_dev.max()),
        "rgb_mean_dev": round(float(rgb_dev.mean()), 6),
    }


def cmd_roundtrip(args, config: PipelineConfig) -> int:
    report = roundtrip_report(io.read_rgb(args.image), config)
    if args.out:
        io.write_json(args.out, report)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


# -- entry point ----------------------------------------------------------


def _config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="JSON file with PipelineConfig fields; flags override it")
    g.add_argument("--alpha", type=int)
    g.add_argument("--p-percent", type=float)
    g.add_argument("--delta-a", type=float)
    g.add_argument("--delta-b", type=float)
    g.add_argument("--min-count", type=int)
    g.add_argument("--min-percent", type=float)
    g.add_argument("--psi", dest="psi_override", type=float, help="fixed threshold instead of the derived one")
    g.add_argument("--resize", type=int, nargs=2, metavar=("H", "W"), dest="histogram_resize")
    g.add_argument("--no-resize", action="store_true")


def load_config(args) -> PipelineConfig:
    base = PipelineConfig.from_json(args.config) if getattr(args, "config", None) else PipelineConfig()
    fields = ("alpha", "p_percent", "delta_a", "delta_b", "min_count", "min_percent", "psi_override", "histogram_resize")
    cfg = base.replace(**{f: getattr(args, f, None) for f in fields})
    if getattr(args, "no_resize", False):
        cfg = dataclasses.replace(cfg, histogram_resize=None)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colorclass", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-bins", help="bin-size trade-off table")
    p.add_argument("--alphas", type=int, nargs="*", default=list(VALIDATED_ALPHAS))
    p.add_argument("--rgb-sweep", action="store_true", help="add the empirical RGB deviation columns")
    p.add_argument("--out", help="write .csv or .json")

    p = sub.add_parser("build-histogram", help="class histogram of an image corpus")
    p.add_argument("corpus", nargs="?", help=f"directory or manifest JSON (default ${ENV_CORPUS})")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    _config_flags(p)

    p = sub.add_parser("optimize-classes", help="approved class set from a histogram")
    p.add_argument("histogram")
    p.add_argument("--out", required=True)
    _config_flags(p)

    p = sub.add_parser("weights", help="class weights for one batch of class maps")
    p.add_argument("classmaps", nargs="*")
    p.add_argument("--approved", help=f"approved set JSON (default ${ENV_APPROVED})")
    p.add_argument("--out", required=True)
    _config_flags(p)

    p = sub.add_parser("harmonize", help="segment-wise a*b* harmonization")
    p.add_argument("--image", help="predicted color image")
    p.add_argument("--ab-prefix", help="a*b* PNG pair <prefix>_a.png/<prefix>_b.png")
    p.add_argument("--classmap", help="class-map PNG (decoded to bin centers)")
    p.add_argument("--approved", help="needed for compacted class maps")
    p.add_argument("--masks", help="directory of per-segment mask PNGs")
    p.add_argument("--labels", help="16-bit labeled segment PNG")
    p.add_argument("--gray", help="grayscale input; writes <out-prefix>_rgb.png")
    p.add_argument("--out-prefix", required=True)
    _config_flags(p)

    p = sub.add_parser("evaluate", help="CNR/CCAR/TAR/MSE/PSNR over a corpus")
    p.add_argument("pred_dir")
    p.add_argument("truth_dir")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--approved", help="compute metrics in the approved (dense) class space")
    p.add_argument("--tar-fraction", action="store_true", help="also report TAR as a fraction")
    _config_flags(p)

    p = sub.add_parser("roundtrip", help="quantization error of one image")
    p.add_argument("image")
    p.add_argument("--out")
    _config_flags(p)
    return parser


COMMANDS = {
    "build-histogram": cmd_build_histogram,
    "optimize-classes": cmd_optimize_classes,
    "weights": cmd_weights,
    "harmonize": cmd_harmonize,
    "evaluate": cmd_evaluate,
    "roundtrip": cmd_roundtrip,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "analyze-bins":
            return cmd_analyze_bins(args)
        return COMMANDS[args.command](args, load_config(args))
    except (UsageError, ValueError, OSError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
