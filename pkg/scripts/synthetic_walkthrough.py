"""End-to-end run of every CLI command on a generated corpus.

    python scripts/synthetic_walkthrough.py --out runs/demo

Builds a corpus with planted color frequencies, derives the approved class
set, computes weights for one batch, harmonizes noisy "predictions" with
their segment masks and evaluates before/after.
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

import numpy as np

from colorclass import io
from colorclass.classgrid import encode_image, make_grid
from colorclass.cli import main
from colorclass.colorspace import rgb_to_lab
from colorclass.synthetic import add_noise, blocky_image, make_corpus


def run(cmd):
    t = time.perf_counter()
    code = main(cmd)
    print(f"  -> exit {code} ({time.perf_counter() - t:.2f}s)")
    if code != 0:
        raise SystemExit(f"command failed: {cmd}")


def walkthrough(out: Path, n_images: int = 60, seed: int = 0) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    grid = make_grid(6)

    print("[1] corpus")
    make_corpus(out / "corpus", n_images=n_images, size=(96, 96), seed=seed)

    print("[2] analyze-bins")
    run(["analyze-bins", "--out", str(out / "bins.csv")])

    print("[3] build-histogram")
    run(["build-histogram", str(out / "corpus"), "--out", str(out / "histogram.json")])

    print("[4] optimize-classes")
    run(["optimize-classes", str(out / "histogram.json"), "--min-count", "50", "--out", str(out / "approved.json")])

    print("[5] weights for one batch of 8 class maps")
    batch = []
    for i, p in enumerate(sorted((out / "corpus").glob("*.png"))[:8]):
        cm = out / "batch" / f"cm_{i}.png"
        cm.parent.mkdir(exist_ok=True)
        io.save_classmap(cm, encode_image(rgb_to_lab(io.read_rgb(p)), grid))
        batch.append(str(cm))
    run(["weights", *batch, "--approved", str(out / "approved.json"), "--out", str(out / "weights.json")])

    print("[6] harmonize noisy predictions")
    rng = np.random.default_rng(seed + 1)
    for d in ("truth", "pred", "harmonized", "work"):
        (out / d).mkdir(exist_ok=True)
    for i in range(12):
        truth, labels = blocky_image(rng, (64, 64))
        pred = add_noise(truth, rng, sigma=1.0, frac=0.08)
        name = f"im_{i:02d}.png"
        io.write_rgb(out / "truth" / name, truth)
        io.write_rgb(out / "pred" / name, pred)
        io.write_png16(out / "work" / f"labels_{i:02d}.png", labels + 1)
        gray = np.rint(rgb_to_lab(truth)[..., 0] * 2.55).astype(np.uint8)
        io.write_rgb(out / "work" / f"gray_{i:02d}.png", np.repeat(gray[..., None], 3, axis=-1))
        run([
            "harmonize", "--image", str(out / "pred" / name),
            "--labels", str(out / "work" / f"labels_{i:02d}.png"),
            "--out-prefix", str(out / "work" / f"h_{i:02d}"),
        ])
        (out / "work" / f"h_{i:02d}_rgb.png").replace(out / "harmonized" / name)

    print("[7] evaluate")
    run(["evaluate", str(out / "pred"), str(out / "truth"), "--out-dir", str(out / "eval_pred")])
    run(["evaluate", str(out / "harmonized"), str(out / "truth"), "--out-dir", str(out / "eval_harmonized")])

    print("[8] roundtrip")
    run(["roundtrip", str(out / "truth" / "im_00.png"), "--out", str(out / "roundtrip.json")])

    approved = io.read_json(out / "approved.json")
    before = io.read_json(out / "eval_pred" / "summary.json")
    after = io.read_json(out / "eval_harmonized" / "summary.json")
    summary = {
        "approved_classes": approved["n_approved"],
        "grid_classes": grid.n_classes,
        "tar_before": before["tar_percent"],
        "tar_after": after["tar_percent"],
        "cnr_before": before["cnr"],
        "cnr_after": after["cnr"],
        "seconds": round(time.perf_counter() - t0, 2),
    }
    io.write_json(out / "walkthrough.json", summary)
    return summary


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="output directory (default: a temporary one)")
    ap.add_argument("--n-images", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.out:
        print(json.dumps(walkthrough(Path(args.out), args.n_images, args.seed), indent=2))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            print(json.dumps(walkthrough(Path(tmp), args.n_images, args.seed), indent=2))
