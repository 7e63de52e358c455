"""Command-line front end.

Subcommands: evolve, spectrum, stats, pr, scars, compare, selftest.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import load_config
from .errors import ConfigError, NumericalError
from .pipeline import compare, run

STAGE_COMMANDS = ("evolve", "spectrum", "stats", "pr", "scars")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--output-dir", default=None, help="override the config's output directory")
    parser.add_argument("--cache-dir", default=None, help="override the config's cache directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwalk-billiards",
        description="Alternating 2D quantum walk on billiard grids: evolution, "
        "spectral statistics, localization and scar analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGE_COMMANDS:
        p = sub.add_parser(stage, help=f"run the {stage} stage (plus its prerequisites)")
        _add_common(p)
        if stage == "spectrum":
            p.add_argument(
                "--export-operator",
                action="store_true",
                help="also dump the sparse step operator as 'row col re im' text",
            )

    p = sub.add_parser("compare", help="side-by-side report of two runs")
    p.add_argument("--config-a", required=True)
    p.add_argument("--config-b", required=True)
    p.add_argument("--output-dir", default=None, help="where to write compare.csv/json")
    p.add_argument(
        "--run-missing",
        action="store_true",
        help="execute either run first if its manifest is absent",
    )
    p.add_argument("--workers", type=int, default=1, help="worker processes for --run-missing")

    p = sub.add_parser("selftest", help="run the built-in numerical sanity checks")
    p.add_argument("--seed", type=int, default=20240801)
    return parser


def _run_stage(args, stage: str) -> int:
    config = load_config(args.config, output_dir=args.output_dir, cache_dir=args.cache_dir)
    config = config.with_stages([stage])
    manifest = run(config)
    if stage == "spectrum" and getattr(args, "export_operator", False):
        from .geometry import build_geometry
        from .walker import CoinParameters, build_step_operator, export_operator

        geometry = build_geometry(config.geometry.kind, config.geometry.m_R, config.geometry.n_U)
        coins = CoinParameters(config.coins.alpha, config.coins.beta, config.coins.phase)
        operator = build_step_operator(geometry, coins)
        export_operator(operator, Path(config.output_dir) / "operator.txt")
    print(f"{stage}: wrote {len(manifest.artifacts)} artifacts to {config.output_dir}")
    return 0


def _run_config_file(path_and_dirs) -> str:
    path, output_dir, cache_dir = path_and_dirs
    config = load_config(path, output_dir=output_dir, cache_dir=cache_dir)
    run(config)
    return str(config.output_dir)


def _cmd_compare(args) -> int:
    config_a = load_config(args.config_a)
    config_b = load_config(args.config_b)
    missing = []
    for path, config in ((args.config_a, config_a), (args.config_b, config_b)):
        if not (Path(config.output_dir) / "manifest.json").exists():
            missing.append(path)
    if missing:
        if not args.run_missing:
            raise ConfigError(
                f"missing manifests for {missing}; run the pipelines first or pass --run-missing"
            )
        jobs = [(path, None, None) for path in missing]
        if args.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                list(pool.map(_run_config_file, jobs))
        else:
            for job in jobs:
                _run_config_file(job)
    out = Path(args.output_dir) if args.output_dir else Path(config_a.output_dir).parent / "compare"
    report = compare(config_a.output_dir, config_b.output_dir, out)
    for row in report["rows"]:
        print(f"{row['metric']}: a={row['a']} b={row['b']} delta={row['delta']}")
    print(f"report written to {out}")
    return 0


def _cmd_selftest(args) -> int:
    import numpy as np
    from scipy import stats as sstats

    from .geometry import build_geometry
    from .spectral import brody_pdf, fit_brody, poisson_pdf, spacing_histogram, unfold_spacings, wigner_pdf
    from .walker import CoinParameters, build_step_operator, coin_matrix, unitarity_defect

    rng = np.random.default_rng(args.seed)
    checks: list[tuple[str, bool, str]] = []

    angles = rng.uniform(0.0, math.pi / 2, size=8)
    worst = 0.0
    for a in angles:
        c = coin_matrix(float(a))
        worst = max(worst, float(np.abs(c.conj().T @ c - np.eye(2)).max()))
    checks.append(("coin unitarity", worst < 1e-15, f"max defect {worst:.2e}"))

    worst = 0.0
    for kind, mr, nu in (("rectangle", 7, 4), ("quarter_stadium", 8, 4), ("full_stadium", 8, 4)):
        op = build_step_operator(build_geometry(kind, mr, nu), CoinParameters(math.pi / 4, math.pi / 3))
        worst = max(worst, unitarity_defect(op.matrix))
    checks.append(("step operator unitarity", worst < 1e-12, f"max defect {worst:.2e}"))

    phases = np.sort(rng.uniform(0.0, 2 * math.pi, size=10_000))
    spacings = unfold_spacings(phases)
    mean_err = abs(float(spacings.mean()) - 1.0)
    checks.append(("unfolded mean = 1", mean_err < 1e-12, f"|mean-1| = {mean_err:.2e}"))
    ks = sstats.kstest(spacings, "expon").statistic
    checks.append(("uniform phases ~ Poisson", ks < 0.02, f"KS = {ks:.4f}"))

    s = np.linspace(0.0, 8.0, 1601)
    end0 = float(np.abs(brody_pdf(s, 0.0) - poisson_pdf(s)).max())
    end1 = float(np.abs(brody_pdf(s, 1.0) - wigner_pdf(s)).max())
    checks.append(("Brody endpoints", max(end0, end1) < 1e-12, f"max dev {max(end0, end1):.2e}"))

    delta_true = 0.5
    b = math.gamma((delta_true + 2) / (delta_true + 1)) ** (delta_true + 1)
    u = rng.uniform(size=50_000)
    samples = (-np.log1p(-u) / b) ** (1.0 / (delta_true + 1.0))
    fit = fit_brody(spacing_histogram(samples, 30, 4.0))
    checks.append(
        ("Brody fit self-consistency", abs(fit.delta - delta_true) <= 0.05, f"delta = {fit.delta:.3f}")
    )

    failed = [name for name, ok, _ in checks if not ok]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if failed:
        raise NumericalError(f"selftest failures: {failed}")
    print("selftest: all checks passed")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in STAGE_COMMANDS:
            return _run_stage(args, args.command)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "selftest":
            return _cmd_selftest(args)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
