"""Run configuration: a single JSON file with a documented schema.

Schema (all angles accept a float in radians or strings like "pi/4"):

    {
      "geometry": {"kind": "rectangle" | "quarter_stadium" | "full_stadium",
                   "m_R": int, "n_U": int},
      "coins": {"alpha": angle, "beta": angle, "phase": angle = "pi/4"},
      "stages": ["evolve" | "spectrum" | "stats" | "pr" | "scars", ...],
      "evolution": {"start": "center" | [m, n],
                    "spin_up": [re, im], "spin_down": [re, im],
                    "steps": int, "snapshot_times": [int, ...],
                    "keep_amplitudes": bool},
      "spectral": {"bin_count": int = 30, "s_max": float = 4.0},
      "scars": {"orbit_file": path | null, "pr_window": [lo, hi],
                "k_min": float = 0.3, "k_max": float = 3.1,
                "k_scale": float = 1.0,
                "sigma_scales": [float, ...] = [1.0, 1.5, 2.0, 3.0]},
      "output_dir": path, "cache_dir": path | null, "seed": int
    }

Stages may be listed in any order; prerequisites (everything after
"evolve" needs "spectrum") are inserted automatically and the resolved
list follows the canonical order above.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError
from .geometry import DomainKind

STAGE_ORDER = ("evolve", "spectrum", "stats", "pr", "scars")
STAGE_DEPS = {
    "evolve": (),
    "spectrum": (),
    "stats": ("spectrum",),
    "pr": ("spectrum",),
    "scars": ("spectrum",),
}

_PI_PATTERN = re.compile(r"^\s*(?:(\d+(?:\.\d+)?)\s*\*\s*)?pi\s*(?:/\s*(\d+(?:\.\d+)?))?\s*$")


def parse_angle(value) -> float:
    """Accept a radian float or compact pi fractions like 'pi/4', '3*pi/8'."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        match = _PI_PATTERN.match(value)
        if match:
            num = float(match.group(1)) if match.group(1) else 1.0
            den = float(match.group(2)) if match.group(2) else 1.0
            return num * math.pi / den
    raise ConfigError(f"cannot parse angle {value!r}")


@dataclass(frozen=True)
class GeometrySettings:
    kind: DomainKind
    m_R: int
    n_U: int


@dataclass(frozen=True)
class CoinSettings:
    alpha: float
    beta: float
    phase: float = math.pi / 4


@dataclass(frozen=True)
class EvolutionSettings:
    start: tuple[int, int] | None = None  # None = grid center
    spin_up: complex = complex(1 / math.sqrt(2), 0.0)
    spin_down: complex = complex(0.0, 1 / math.sqrt(2))
    steps: int = 232
    snapshot_times: tuple[int, ...] = (38, 76, 152, 232)
    keep_amplitudes: bool = False


@dataclass(frozen=True)
class SpectralSettings:
    bin_count: int = 30
    s_max: float = 4.0


@dataclass(frozen=True)
class ScarSettings:
    orbit_file: str | None = None
    pr_window: tuple[float, float] = (600.0, 950.0)
    k_min: float = 0.3
    k_max: float = 3.1
    k_scale: float = 1.0
    sigma_scales: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0)


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometrySettings
    coins: CoinSettings
    stages: tuple[str, ...]
    evolution: EvolutionSettings = EvolutionSettings()
    spectral: SpectralSettings = SpectralSettings()
    scars: ScarSettings = ScarSettings()
    output_dir: Path = Path("runs/out")
    cache_dir: Path | None = None
    seed: int = 20240801
    label: str = ""

    def start_site(self) -> tuple[int, int]:
        if self.evolution.start is not None:
            return self.evolution.start
        return (self.geometry.m_R // 2, self.geometry.n_U // 2)

    def physics_payload(self) -> dict:
        """The part of the config that determines numerical outputs."""
        return {
            "geometry": {
                "kind": self.geometry.kind.value,
                "m_R": self.geometry.m_R,
                "n_U": self.geometry.n_U,
            },
            "coins": {
                "alpha": self.coins.alpha,
                "beta": self.coins.beta,
                "phase": self.coins.phase,
            },
            "stages": list(self.stages),
            "evolution": {
                "start": list(self.start_site()),
                "spin_up": [self.evolution.spin_up.real, self.evolution.spin_up.imag],
                "spin_down": [self.evolution.spin_down.real, self.evolution.spin_down.imag],
                "steps": self.evolution.steps,
                "snapshot_times": list(self.evolution.snapshot_times),
                "keep_amplitudes": self.evolution.keep_amplitudes,
            },
            "spectral": {
                "bin_count": self.spectral.bin_count,
                "s_max": self.spectral.s_max,
            },
            "scars": {
                "orbit_file": self.scars.orbit_file,
                "pr_window": list(self.scars.pr_window),
                "k_min": self.scars.k_min,
                "k_max": self.scars.k_max,
                "k_scale": self.scars.k_scale,
                "sigma_scales": list(self.scars.sigma_scales),
            },
            "seed": self.seed,
        }

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.physics_payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def with_stages(self, stages) -> "RunConfig":
        return replace(self, stages=resolve_stages(stages))


def resolve_stages(stages) -> tuple[str, ...]:
    requested = list(stages)
    unknown = [s for s in requested if s not in STAGE_ORDER]
    if unknown:
        raise ConfigError(f"unknown stages {unknown}; valid: {list(STAGE_ORDER)}")
    wanted = set(requested)
    for stage in requested:
        wanted.update(STAGE_DEPS[stage])
    return tuple(s for s in STAGE_ORDER if s in wanted)


def _complex_pair(raw, name: str) -> complex:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2):
        raise ConfigError(f"{name} must be a [re, im] pair")
    return complex(float(raw[0]), float(raw[1]))


def load_config(path, output_dir: Path | None = None, cache_dir: Path | None = None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    CLI-level output/cache directory overrides take precedence over the
    values in the file.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")

    known = {
        "geometry", "coins", "stages", "evolution", "spectral", "scars",
        "output_dir", "cache_dir", "seed", "label",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    try:
        geo_raw = raw["geometry"]
        geometry = GeometrySettings(
            kind=DomainKind(geo_raw["kind"]),
            m_R=int(geo_raw["m_R"]),
            n_U=int(geo_raw["n_U"]),
        )
        coin_raw = raw.get("coins", {})
        coins = CoinSettings(
            alpha=parse_angle(coin_raw.get("alpha", "pi/4")),
            beta=parse_angle(coin_raw.get("beta", "pi/4")),
            phase=parse_angle(coin_raw.get("phase", "pi/4")),
        )
        stages = resolve_stages(raw.get("stages", ["spectrum"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc

    for name, angle in (("alpha", coins.alpha), ("beta", coins.beta)):
        if not 0.0 <= angle <= math.pi / 2:
            raise ConfigError(f"coin angle {name}={angle} outside [0, pi/2]")

    evo_raw = raw.get("evolution", {})
    start_raw = evo_raw.get("start", "center")
    if start_raw == "center":
        start = None
    elif isinstance(start_raw, (list, tuple)) and len(start_raw) == 2:
        start = (int(start_raw[0]), int(start_raw[1]))
    else:
        raise ConfigError(f"evolution.start must be 'center' or [m, n], got {start_raw!r}")
    defaults = EvolutionSettings(start=start)
    evolution = EvolutionSettings(
        start=start,
        spin_up=_complex_pair(evo_raw.get("spin_up", [defaults.spin_up.real, defaults.spin_up.imag]), "spin_up"),
        spin_down=_complex_pair(
            evo_raw.get("spin_down", [defaults.spin_down.real, defaults.spin_down.imag]), "spin_down"
        ),
        steps=int(evo_raw.get("steps", defaults.steps)),
        snapshot_times=tuple(int(t) for t in evo_raw.get("snapshot_times", defaults.snapshot_times)),
        keep_amplitudes=bool(evo_raw.get("keep_amplitudes", False)),
    )
    if evolution.steps < 0:
        raise ConfigError("evolution.steps must be non-negative")

    spec_raw = raw.get("spectral", {})
    spectral = SpectralSettings(
        bin_count=int(spec_raw.get("bin_count", 30)),
        s_max=float(spec_raw.get("s_max", 4.0)),
    )

    scar_raw = raw.get("scars", {})
    window_raw = scar_raw.get("pr_window", [600.0, 950.0])
    if not (isinstance(window_raw, (list, tuple)) and len(window_raw) == 2):
        raise ConfigError("scars.pr_window must be a [lo, hi] pair")
    scars = ScarSettings(
        orbit_file=scar_raw.get("orbit_file"),
        pr_window=(float(window_raw[0]), float(window_raw[1])),
        k_min=float(scar_raw.get("k_min", 0.3)),
        k_max=float(scar_raw.get("k_max", 3.1)),
        k_scale=float(scar_raw.get("k_scale", 1.0)),
        sigma_scales=tuple(float(s) for s in scar_raw.get("sigma_scales", (1.0, 1.5, 2.0, 3.0))),
    )
    if scars.orbit_file is not None:
        orbit_path = Path(scars.orbit_file)
        if not orbit_path.is_absolute():
            orbit_path = path.parent / orbit_path
        if not orbit_path.exists():
            raise ConfigError(f"scars.orbit_file not found: {orbit_path}")
        scars = replace(scars, orbit_file=str(orbit_path))

    out = Path(output_dir) if output_dir is not None else Path(raw.get("output_dir", "runs/out"))
    cache_raw = raw.get("cache_dir")
    cache = Path(cache_dir) if cache_dir is not None else (Path(cache_raw) if cache_raw else None)

    return RunConfig(
        geometry=geometry,
        coins=coins,
        stages=stages,
        evolution=evolution,
        spectral=spectral,
        scars=scars,
        output_dir=out,
        cache_dir=cache,
        seed=int(raw.get("seed", 20240801)),
        label=str(raw.get("label", path.stem)),
    )
