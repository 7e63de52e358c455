#!/usr/bin/env python3
"""Full chaoticity analysis at 50x25: spectra, level statistics, PR, scars.

Runs the quarter-stadium and rectangle presets for both coin pairs
(reusing cached eigendecompositions) and writes side-by-side comparison
reports for the symmetric and asymmetric pairs.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from qwalk_billiards.config import load_config
from qwalk_billiards.pipeline import compare, run

PRESETS = Path(__file__).resolve().parent.parent / "presets"

PAIRS = {
    "symmetric": ("quarter_stadium_50x25_symmetric", "rectangle_50x25_symmetric"),
    "asymmetric": ("quarter_stadium_50x25_asymmetric", "rectangle_50x25_asymmetric"),
}


def _run_preset(name: str) -> str:
    config = load_config(PRESETS / f"{name}.json")
    run(config)
    return str(config.output_dir)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workers", type=int, default=1, help="parallel preset runs")
    args = parser.parse_args()

    names = sorted({name for pair in PAIRS.values() for name in pair})
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            dirs = dict(zip(names, pool.map(_run_preset, names)))
    else:
        dirs = {name: _run_preset(name) for name in names}
    for name, directory in dirs.items():
        print(f"{name}: {directory}")

    for tag, (stadium, rectangle) in PAIRS.items():
        out = Path("runs") / f"compare_{tag}"
        report = compare(dirs[stadium], dirs[rectangle], out)
        print(f"\n=== {tag} coins: stadium (a) vs rectangle (b) -> {out} ===")
        for row in report["rows"]:
            print(f"  {row['metric']}: a={row['a']} b={row['b']}")


if __name__ == "__main__":
    main()
