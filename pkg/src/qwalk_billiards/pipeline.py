"""Stage orchestration: geometry -> operator -> spectra -> analyses.

Every stage writes its data files (CSV plus a JSON sidecar of metadata)
into the run's output directory and registers them in a manifest.  Data
files are deterministic for a given config; timestamps and timings live
only in the manifest.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cache import get_or_compute
from .config import RunConfig
from .dynamics import centered_initial_state, evolve
from .errors import ConfigError
from .geometry import DomainKind, build_geometry
from .localization import eigenstate_probability, pr_histogram, pr_report
from .plotting import save_heatmap, save_pr_histogram, save_spacing_plot
from .scars import best_scar_match, default_orbit_library, transplant_to_rectangle
from .spectral import fit_brody, spacing_histogram, unfold_spacings
from .walker import CoinParameters, build_step_operator

MANIFEST_NAME = "manifest.json"

# Detection threshold for the summary's scarring flag.  Bhattacharyya
# overlaps of extended states with a scar tube plateau near 0.6; matches
# clearly above that indicate genuine concentration along the orbit.
SCARRING_THRESHOLD = 0.75


@dataclass
class RunManifest:
    config_hash: str
    label: str
    tool_version: str = __version__
    created: str = ""
    stages: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)
    partial: bool = False
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "label": self.label,
            "tool_version": self.tool_version,
            "created": self.created,
            "stages": self.stages,
            "artifacts": self.artifacts,
            "timings": self.timings,
            "cache": self.cache,
            "partial": self.partial,
            "error": self.error,
        }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar(path: Path, config_hash: str, columns: list[str], stage: str, extra: dict | None = None) -> Path:
    meta = {"config": config_hash, "columns": columns, "stage": stage}
    if extra:
        meta.update(extra)
    side = path.with_suffix(path.suffix + ".meta.json")
    _write_json(side, meta)
    return side


def _slug(config: RunConfig) -> str:
    g, c = config.geometry, config.coins
    return f"{g.kind.value}_{g.m_R}x{g.n_U}_a{c.alpha:.4f}_b{c.beta:.4f}"


class _Run:
    def __init__(self, config: RunConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(
            config_hash=config.config_hash,
            label=config.label,
            created=datetime.now(timezone.utc).isoformat(),
        )
        self.geometry = build_geometry(config.geometry.kind, config.geometry.m_R, config.geometry.n_U)
        self.coins = CoinParameters(config.coins.alpha, config.coins.beta, config.coins.phase)
        self.operator = None
        self.decomposition = None
        self._pr_values = None

    def artifact(self, path: Path, stage: str) -> None:
        self.manifest.artifacts.append(
            {"path": str(path.relative_to(self.out)), "stage": stage, "config": self.config.config_hash}
        )

    def ensure_operator(self):
        if self.operator is None:
            self.operator = build_step_operator(self.geometry, self.coins)
        return self.operator

    def ensure_decomposition(self):
        if self.decomposition is None:
            operator = self.ensure_operator()
            decomposition, hit = get_or_compute(self.config.cache_dir, operator)
            self.decomposition = decomposition
            self.manifest.cache = {
                "hit": hit,
                "key": operator.parameter_hash,
                "dir": str(self.config.cache_dir) if self.config.cache_dir else None,
            }
        return self.decomposition

    def pr_values(self):
        if self._pr_values is None:
            from .localization import participation_ratios

            self._pr_values = participation_ratios(self.ensure_decomposition())
        return self._pr_values

    # ----- stages -------------------------------------------------------

    def stage_geometry(self) -> None:
        path = self.out / "geometry.json"
        payload = self.geometry.summary()
        payload["config"] = self.config.config_hash
        _write_json(path, payload)
        self.artifact(path, "geometry")

    def stage_evolve(self) -> dict:
        cfg = self.config
        operator = self.ensure_operator()
        m0, n0 = cfg.start_site()
        state = centered_initial_state(
            self.geometry, m0, n0, cfg.evolution.spin_up, cfg.evolution.spin_down
        )
        snapshots, final = evolve(state, operator, cfg.evolution.steps, cfg.evolution.snapshot_times)
        slug = _slug(cfg)
        for t, grid in snapshots:
            base = self.out / f"evolve_{slug}_t{t:04d}"
            csv_path = base.parent / (base.name + ".csv")
            grid.write_csv(csv_path, cfg.config_hash)
            self.artifact(csv_path, "evolve")
            self._sidecar_csv(csv_path, ["m", "n", "p"], "evolve", {"t": t, "start": [m0, n0]})
            png_path = base.parent / (base.name + ".png")
            save_heatmap(grid, png_path, title=f"t = {t}")
            self.artifact(png_path, "evolve")
        if cfg.evolution.keep_amplitudes:
            amp_path = self.out / f"evolve_{slug}_final_state.npz"
            np.savez(amp_path, amplitudes=final.amplitudes, config=np.str_(cfg.config_hash))
            self.artifact(amp_path, "evolve")
        return {
            "steps": cfg.evolution.steps,
            "snapshots": [t for t, _ in snapshots],
            "final_norm": final.norm(),
        }

    def stage_spectrum(self) -> dict:
        decomposition = self.ensure_decomposition()
        path = self.out / "eigenphases.csv"
        wrapped = decomposition.wrapped_phases()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# config={self.config.config_hash}\n")
            fh.write("index,eigenphase,eigenphase_wrapped,residual\n")
            for i in range(decomposition.size):
                fh.write(
                    f"{i},{float(decomposition.eigenphases[i])!r},"
                    f"{float(wrapped[i])!r},{float(decomposition.residuals[i])!r}\n"
                )
        self.artifact(path, "spectrum")
        self._sidecar_csv(
            path,
            ["index", "eigenphase", "eigenphase_wrapped", "residual"],
            "spectrum",
            {"dimension": decomposition.size, "max_residual": float(decomposition.residuals.max())},
        )
        return {"dimension": decomposition.size, "max_residual": float(decomposition.residuals.max())}

    def stage_stats(self) -> dict:
        cfg = self.config
        decomposition = self.ensure_decomposition()
        spacings = unfold_spacings(decomposition.eigenphases)
        hist = spacing_histogram(spacings, cfg.spectral.bin_count, cfg.spectral.s_max)
        fit = fit_brody(hist)
        csv_path = self.out / "spacing_histogram.csv"
        hist.write_csv(csv_path, cfg.config_hash)
        self.artifact(csv_path, "stats")
        self._sidecar_csv(
            csv_path,
            ["bin_left", "bin_right", "bin_center", "density"],
            "stats",
            {"bin_count": cfg.spectral.bin_count, "s_max": cfg.spectral.s_max,
             "overflow_count": hist.overflow_count},
        )
        fits_path = self.out / "spectral_fits.json"
        payload = fit.as_dict()
        payload.update(
            {
                "config": cfg.config_hash,
                "bin_count": cfg.spectral.bin_count,
                "s_max": cfg.spectral.s_max,
                "overflow_count": hist.overflow_count,
                "first_bin_density": float(hist.density[0]),
                "spacing_count": int(spacings.size),
            }
        )
        _write_json(fits_path, payload)
        self.artifact(fits_path, "stats")
        plot_path = self.out / "spacing_plot.png"
        save_spacing_plot(hist, fit, plot_path, title=_slug(cfg))
        self.artifact(plot_path, "stats")
        return fit.as_dict()

    def stage_pr(self) -> dict:
        cfg = self.config
        decomposition = self.ensure_decomposition()
        report = pr_report(decomposition)
        csv_path = self.out / "pr_report.csv"
        report.write_csv(csv_path, cfg.config_hash)
        self.artifact(csv_path, "pr")
        self._sidecar_csv(csv_path, ["index", "eigenphase", "pr"], "pr", {"dimension": report.dimension})
        hist = pr_histogram(report)
        hist_path = self.out / "pr_histogram.csv"
        with open(hist_path, "w", encoding="utf-8") as fh:
            fh.write(f"# config={cfg.config_hash}\n")
            fh.write("bin_left,bin_right,density\n")
            for left, right, rho in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.density):
                fh.write(f"{float(left)!r},{float(right)!r},{float(rho)!r}\n")
        self.artifact(hist_path, "pr")
        self._sidecar_csv(hist_path, ["bin_left", "bin_right", "density"], "pr", None)
        png_path = self.out / "pr_histogram.png"
        save_pr_histogram(hist, png_path, title=_slug(cfg))
        self.artifact(png_path, "pr")
        summary = {
            "config": cfg.config_hash,
            "mean_pr": report.mean,
            "median_pr": report.median,
            "dimension": report.dimension,
            "mean_pr_over_dimension": report.mean / report.dimension,
        }
        _write_json(self.out / "pr_summary.json", summary)
        self.artifact(self.out / "pr_summary.json", "pr")
        return summary

    def stage_scars(self) -> dict:
        cfg = self.config
        decomposition = self.ensure_decomposition()
        if self.geometry.kind is DomainKind.QUARTER_STADIUM:
            orbits = default_orbit_library(self.geometry, cfg.scars.orbit_file)
        elif self.geometry.kind is DomainKind.RECTANGLE:
            reference = build_geometry(DomainKind.QUARTER_STADIUM, self.geometry.m_R, self.geometry.n_U)
            stadium_orbits = default_orbit_library(reference, cfg.scars.orbit_file)
            orbits = [
                t for t in (transplant_to_rectangle(o, self.geometry) for o in stadium_orbits)
                if t is not None
            ]
        else:
            orbits = []
        prs = self.pr_values()
        results = []
        ranking_rows = []
        for orbit in orbits:
            match = best_scar_match(
                decomposition,
                orbit,
                cfg.scars.pr_window,
                k_min=cfg.scars.k_min * cfg.scars.k_scale,
                k_max=cfg.scars.k_max * cfg.scars.k_scale,
                sigma_scales=cfg.scars.sigma_scales,
                pr_values=prs,
            )
            results.append(match)
            for rank, (record, value) in enumerate(match.ranking[:20]):
                ranking_rows.append(
                    (orbit.name, rank, record.index, record.eigenphase, record.pr, value)
                )
            if match.state is not None:
                grid = eigenstate_probability(decomposition, match.state.index)
                png = self.out / f"scar_{orbit.name.replace(' ', '-')}_best_state.png"
                save_heatmap(
                    grid, png,
                    title=f"{orbit.name}: state {match.state.index}, overlap {match.overlap:.3f}",
                )
                self.artifact(png, "scars")

        csv_path = self.out / "scar_rankings.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(f"# config={cfg.config_hash}\n")
            fh.write("orbit,rank,state_index,eigenphase,pr,overlap\n")
            for name, rank, idx, phase, pr, value in ranking_rows:
                fh.write(f"{name},{rank},{idx},{float(phase)!r},{float(pr)!r},{float(value)!r}\n")
        self.artifact(csv_path, "scars")
        self._sidecar_csv(
            csv_path,
            ["orbit", "rank", "state_index", "eigenphase", "pr", "overlap"],
            "scars",
            {"pr_window": list(cfg.scars.pr_window)},
        )

        summary = {
            "config": cfg.config_hash,
            "pr_window": list(cfg.scars.pr_window),
            "orbits": {
                m.orbit.name: {
                    "best_overlap": m.overlap,
                    "k": m.k,
                    "n_bs": m.n_bs,
                    "sigma": m.sigma,
                    "orbit_length": m.orbit.length,
                    "state_index": m.state.index if m.state else None,
                    "state_pr": m.state.pr if m.state else None,
                    "state_eigenphase": m.state.eigenphase if m.state else None,
                }
                for m in results
            },
        }
        best = max((m.overlap for m in results), default=0.0)
        summary["scarring"] = bool(best >= SCARRING_THRESHOLD)
        summary["scarring_threshold"] = SCARRING_THRESHOLD
        _write_json(self.out / "scar_summary.json", summary)
        self.artifact(self.out / "scar_summary.json", "scars")
        return summary

    def _sidecar_csv(self, path: Path, columns: list[str], stage: str, extra: dict | None) -> None:
        side = _sidecar(path, self.config.config_hash, columns, stage, extra)
        self.artifact(side, stage)


def run(config: RunConfig) -> RunManifest:
    """Execute the configured stages; a stage failure leaves a partial manifest."""
    job = _Run(config)
    job.stage_geometry()
    stage_fn = {
        "evolve": job.stage_evolve,
        "spectrum": job.stage_spectrum,
        "stats": job.stage_stats,
        "pr": job.stage_pr,
        "scars": job.stage_scars,
    }
    try:
        for stage in config.stages:
            started = time.perf_counter()
            job.manifest.stages[stage] = stage_fn[stage]()
            job.manifest.timings[stage] = time.perf_counter() - started
    except Exception as exc:
        job.manifest.partial = True
        job.manifest.error = f"{type(exc).__name__}: {exc}"
        _write_json(job.out / MANIFEST_NAME, job.manifest.as_dict())
        raise
    _write_json(job.out / MANIFEST_NAME, job.manifest.as_dict())
    return job.manifest


def load_manifest(output_dir: Path) -> dict:
    path = Path(output_dir) / MANIFEST_NAME
    if not path.exists():
        raise ConfigError(f"no manifest at {path}; run the pipeline first")
    return json.loads(path.read_text(encoding="utf-8"))


def _load_stage_json(output_dir: Path, name: str) -> dict | None:
    path = Path(output_dir) / name
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def compare(dir_a: Path, dir_b: Path, out_path: Path | None = None) -> dict:
    """Side-by-side report of two completed runs.

    Raises if the runs share no comparable stage outputs.
    """
    manifest_a = load_manifest(dir_a)
    manifest_b = load_manifest(dir_b)
    sides = {}
    for label, directory, manifest in (("a", Path(dir_a), manifest_a), ("b", Path(dir_b), manifest_b)):
        geometry = _load_stage_json(directory, "geometry.json") or {}
        sides[label] = {
            "label": manifest.get("label", ""),
            "config_hash": manifest.get("config_hash"),
            "directory": str(directory),
            "geometry": {k: geometry.get(k) for k in ("kind", "m_R", "n_U", "site_count")},
            "fits": _load_stage_json(directory, "spectral_fits.json"),
            "pr": _load_stage_json(directory, "pr_summary.json"),
            "scars": _load_stage_json(directory, "scar_summary.json"),
        }
    comparable = [
        key for key in ("fits", "pr", "scars")
        if sides["a"][key] is not None and sides["b"][key] is not None
    ]
    if not comparable:
        raise ConfigError(
            "runs share no comparable stage outputs (need stats, pr or scars on both)"
        )

    def metric(side: dict, group: str, key: str):
        payload = side.get(group)
        return payload.get(key) if payload else None

    rows = []
    for group, key in (
        ("pr", "mean_pr"),
        ("pr", "median_pr"),
        ("pr", "mean_pr_over_dimension"),
        ("fits", "delta"),
        ("fits", "rms_brody"),
        ("fits", "rms_wigner"),
        ("fits", "rms_poisson"),
    ):
        va, vb = metric(sides["a"], group, key), metric(sides["b"], group, key)
        delta = (vb - va) if (va is not None and vb is not None) else None
        rows.append({"metric": key, "a": va, "b": vb, "delta": delta})
    scar_a = sides["a"]["scars"] or {}
    scar_b = sides["b"]["scars"] or {}
    rows.append(
        {
            "metric": "scarring",
            "a": scar_a.get("scarring"),
            "b": scar_b.get("scarring"),
            "delta": None,
        }
    )
    report = {"a": sides["a"], "b": sides["b"], "rows": rows}
    if out_path is not None:
        out_path = Path(out_path)
        out_path.mkdir(parents=True, exist_ok=True)
        _write_json(out_path / "compare.json", report)
        csv_path = out_path / "compare.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(f"# config_a={sides['a']['config_hash']} config_b={sides['b']['config_hash']}\n")
            fh.write("metric,a,b,delta\n")
            for row in rows:
                fh.write(f"{row['metric']},{row['a']},{row['b']},{row['delta']}\n")
        _sidecar(csv_path, f"{sides['a']['config_hash']}|{sides['b']['config_hash']}",
                 ["metric", "a", "b", "delta"], "compare", None)
    return report
