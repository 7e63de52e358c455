#!/usr/bin/env python3
"""Evolve the centered state on the 150x75 rectangle and full stadium.

Writes probability snapshots (CSV + heatmap) at the preset times for both
geometries, then prints where the two runs first diverge.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from qwalk_billiards.config import load_config
from qwalk_billiards.pipeline import run

PRESETS = Path(__file__).resolve().parent.parent / "presets"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-root", default=None, help="root directory for run outputs")
    args = parser.parse_args()

    manifests = {}
    for name in ("rectangle_150x75_evolution", "full_stadium_150x75_evolution"):
        out = Path(args.output_root) / name if args.output_root else None
        config = load_config(PRESETS / f"{name}.json", output_dir=out)
        manifests[name] = (config, run(config))
        print(f"{name}: artifacts in {config.output_dir}")

    rect_dir = Path(manifests["rectangle_150x75_evolution"][0].output_dir)
    stad_dir = Path(manifests["full_stadium_150x75_evolution"][0].output_dir)
    for t in (38, 76, 152, 232):
        rect = sorted(rect_dir.glob(f"evolve_*_t{t:04d}.csv"))[0]
        stad = sorted(stad_dir.glob(f"evolve_*_t{t:04d}.csv"))[0]
        dense = {}
        for tag, path in (("rect", rect), ("stad", stad)):
            grid = np.zeros((76, 151))
            data = np.loadtxt(path, delimiter=",", skiprows=2)  # hash line + header
            grid[data[:, 1].astype(int), data[:, 0].astype(int)] = data[:, 2]
            dense[tag] = grid
        diff = np.abs(dense["rect"] - dense["stad"])
        print(f"t={t}: max |p_rect - p_stadium| = {diff.max():.3e}, L1 = {diff.sum():.4f}")


if __name__ == "__main__":
    main()
