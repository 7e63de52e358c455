"""Semiclassical scar functions on periodic orbits of the quarter stadium.

A scar function is a plane wave along a periodic orbit times a Gaussian
of fixed width in the transverse coordinate, with the wavenumber chosen
by the Bohr-Sommerfeld rule k L = 2 pi n over the orbit circuit length.
Orbits that hit both end walls perpendicularly are stored as open
polylines and traversed forward and back, so their circuit length is
twice the polyline length.  Eigenstates are ranked against a scar by the
Bhattacharyya coefficient sum(sqrt(p q)) of the two site-probability
distributions, which is 1 only for identical distributions.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .dynamics import ProbabilityGrid
from .geometry import DomainKind, GridGeometry
from .localization import StateRecord, participation_ratios, select_states
from .spectral import SpectralDecomposition

TWO_PI = 2.0 * math.pi

BOUNCE_TYPES = ("straight-wall", "arc", "symmetry-axis")
# Dirichlet-like sign flip at hard walls; none when crossing a symmetry axis.
DEFAULT_BOUNCE_SIGNS = {"straight-wall": -1.0, "arc": -1.0, "symmetry-axis": 1.0}


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """Polyline periodic orbit in billiard units (one grid cell = 1).

    ``closed=True`` means the vertex list is a loop; ``closed=False``
    means a self-retracing path that reflects perpendicularly off the
    walls at both ends.
    """

    name: str
    vertices: np.ndarray  # (k, 2) float array
    closed: bool
    bounce_types: tuple[str, ...]  # one per vertex

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 2:
            raise ValueError(f"orbit {self.name!r} needs at least two (x, y) vertices")
        if len(self.bounce_types) != verts.shape[0]:
            raise ValueError(f"orbit {self.name!r}: one bounce type per vertex required")
        unknown = set(self.bounce_types) - set(BOUNCE_TYPES)
        if unknown:
            raise ValueError(f"orbit {self.name!r}: unknown bounce types {sorted(unknown)}")
        if np.any(np.all(np.diff(verts, axis=0) == 0.0, axis=1)):
            raise ValueError(f"orbit {self.name!r}: consecutive vertices coincide")
        object.__setattr__(self, "vertices", verts)

    @property
    def path_length(self) -> float:
        """Length of the vertex polyline (no closure, no retrace)."""
        return float(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum())

    @property
    def length(self) -> float:
        """Full circuit length L used in the quantization rule."""
        if self.closed:
            closing = float(np.linalg.norm(self.vertices[0] - self.vertices[-1]))
            return self.path_length + closing
        return 2.0 * self.path_length

    def traversal(self, bounce_signs: dict[str, float] | None = None):
        """Directed segments of one full circuit.

        Yields (origin, unit direction, length, start arclength, sign)
        with the arclength accumulated around the circuit and the sign
        the product of the bounce factors met so far.
        """
        signs = DEFAULT_BOUNCE_SIGNS if bounce_signs is None else bounce_signs
        verts = self.vertices
        k = verts.shape[0]
        if self.closed:
            seq = [(i, (i + 1) % k) for i in range(k)]
        else:
            seq = [(i, i + 1) for i in range(k - 1)]
            seq += [(i + 1, i) for i in reversed(range(k - 1))]
        xi = 0.0
        sign = 1.0
        for step, (i, j) in enumerate(seq):
            if step > 0:
                sign *= signs[self.bounce_types[i]]
            a, b = verts[i], verts[j]
            delta = b - a
            seg_len = float(np.linalg.norm(delta))
            yield a, delta / seg_len, seg_len, xi, sign
            xi += seg_len


def _library_path():
    return resources.files("qwalk_billiards") / "data" / "orbit_library.json"


def default_orbit_library(
    geometry: GridGeometry, path=None
) -> list[PeriodicOrbit]:
    """Quarter-stadium orbit set, scaled to the geometry's arc radius.

    Other domain kinds have no curved wall to anchor these orbits, so the
    library is empty for them (with a warning).
    """
    if geometry.kind is not DomainKind.QUARTER_STADIUM:
        warnings.warn(
            f"no periodic-orbit library for a {geometry.kind.value} domain",
            stacklevel=2,
        )
        return []
    if path is None:
        raw = json.loads(_library_path().read_text(encoding="utf-8"))
    else:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    orbits = []
    for entry in raw["orbits"]:
        orbit = PeriodicOrbit(
            name=entry["name"],
            vertices=np.asarray(entry["vertices"], dtype=float) * geometry.n_U,
            closed=bool(entry["closed"]),
            bounce_types=tuple(entry["bounce_types"]),
        )
        _check_inside(orbit, geometry)
        orbits.append(orbit)
    return orbits


def _check_inside(orbit: PeriodicOrbit, geometry: GridGeometry) -> None:
    for x, y in orbit.vertices:
        if not geometry.contains_point(float(x), float(y), tol=1e-6):
            raise ValueError(
                f"orbit {orbit.name!r} vertex ({x}, {y}) lies outside the billiard"
            )


def transplant_to_rectangle(
    orbit: PeriodicOrbit, geometry: GridGeometry
) -> PeriodicOrbit | None:
    """Flat-wall analogue of a stadium orbit, where one exists.

    Arc bounces have no counterpart on a rectangle, so any orbit touching
    the arc is not transplantable and yields None.
    """
    if geometry.kind is not DomainKind.RECTANGLE:
        raise ValueError("transplant target must be a rectangle geometry")
    if "arc" in orbit.bounce_types:
        return None
    transplanted = PeriodicOrbit(
        name=f"{orbit.name} (flat analogue)",
        vertices=orbit.vertices.copy(),
        closed=orbit.closed,
        bounce_types=orbit.bounce_types,
    )
    _check_inside(transplanted, geometry)
    return transplanted


def quantize_wavenumber(
    length: float, k_target: float, phase_correction: float = 0.0
) -> tuple[float, int]:
    """Bohr-Sommerfeld wavenumber nearest to k_target: k L = 2 pi n.

    An optional phase correction shifts the rule to
    k L = 2 pi n + phase_correction.
    """
    if length <= 0:
        raise ValueError("orbit length must be positive")
    if k_target <= 0:
        raise ValueError("target wavenumber must be positive")
    n = round((k_target * length - phase_correction) / TWO_PI)
    if n < 1:
        raise ValueError(
            f"k_target={k_target} quantizes to n={n}; no positive mode fits length {length}"
        )
    k = (TWO_PI * n + phase_correction) / length
    return k, int(n)


def default_sigma(length: float, n_bs: int) -> float:
    """Transverse width sqrt(L / (2 pi n)) = 1/sqrt(k), in grid cells."""
    return math.sqrt(length / (TWO_PI * n_bs))


@dataclass(frozen=True, eq=False)
class ScarFunction:
    """Normalized resonance field of one orbit at a quantized wavenumber."""

    geometry: GridGeometry
    orbit: PeriodicOrbit
    k: float
    n_bs: int
    sigma: float
    field: np.ndarray  # complex, per site, unit 2-norm
    probability: np.ndarray  # |field|^2, sums to 1

    def probability_grid(self) -> ProbabilityGrid:
        return ProbabilityGrid(geometry=self.geometry, p=self.probability)

    def phase_winding(self) -> float:
        """Plane-wave phase accumulated over one circuit; 2 pi n_bs by construction."""
        return self.k * self.orbit.length


def build_scar_function(
    geometry: GridGeometry,
    orbit: PeriodicOrbit,
    k: float,
    sigma: float,
    bounce_signs: dict[str, float] | None = None,
) -> ScarFunction:
    """Superpose exp(i k xi) Gaussians over the orbit traversal.

    xi is the arclength accumulated around the circuit (so the phase is
    continuous through the bounces) and the Gaussian acts on the signed
    transverse distance from the current segment.  Sites project onto a
    segment only within its extent; near a vertex both adjacent segments
    contribute, which keeps the field continuous there.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if sigma < 1.0:
        warnings.warn(
            f"sigma={sigma} is below one grid cell; the transverse profile is unresolved",
            stacklevel=2,
        )
    _check_inside(orbit, geometry)
    x = geometry.sites_m.astype(float)
    y = geometry.sites_n.astype(float)
    field = np.zeros(geometry.site_count, dtype=np.complex128)
    inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma)
    for origin, direction, seg_len, xi0, sign in orbit.traversal(bounce_signs):
        dx = x - origin[0]
        dy = y - origin[1]
        t = dx * direction[0] + dy * direction[1]
        eta = direction[0] * dy - direction[1] * dx
        mask = (t >= 0.0) & (t <= seg_len)
        if not np.any(mask):
            continue
        field[mask] += sign * np.exp(
            1j * k * (xi0 + t[mask]) - eta[mask] ** 2 * inv_two_sigma2
        )
    norm = np.linalg.norm(field)
    if norm == 0.0:
        raise ValueError(f"orbit {orbit.name!r} produced an empty field on this grid")
    field /= norm
    n_bs = int(round(k * orbit.length / TWO_PI))
    return ScarFunction(
        geometry=geometry,
        orbit=orbit,
        k=k,
        n_bs=n_bs,
        sigma=sigma,
        field=field,
        probability=np.abs(field) ** 2,
    )


def overlap(p: ProbabilityGrid, q: ProbabilityGrid) -> float:
    """Bhattacharyya coefficient sum(sqrt(p q)) of two site distributions."""
    gp, gq = p.geometry, q.geometry
    if (gp.kind, gp.m_R, gp.n_U) != (gq.kind, gq.m_R, gq.n_U):
        raise ValueError("probability grids live on different geometries")
    return float(np.minimum(np.sqrt(p.p * q.p).sum(), 1.0))


def rank_candidates(
    decomposition: SpectralDecomposition,
    scar: ScarFunction,
    pr_window: tuple[float, float],
    pr_values: np.ndarray | None = None,
) -> list[tuple[StateRecord, float]]:
    """States in the PR window sorted by descending overlap with the scar."""
    prs = participation_ratios(decomposition) if pr_values is None else pr_values
    records = select_states(decomposition, pr_window, pr_values=prs)
    if not records:
        return []
    indices = [r.index for r in records]
    vectors = decomposition.eigenvectors[:, indices]
    site_p = np.abs(vectors[0::2, :]) ** 2 + np.abs(vectors[1::2, :]) ** 2
    overlaps = np.sqrt(site_p * scar.probability[:, None]).sum(axis=0)
    ranked = sorted(zip(records, overlaps), key=lambda item: -item[1])
    return [(rec, float(val)) for rec, val in ranked]


@dataclass(frozen=True, eq=False)
class ScarMatch:
    """Best (k, sigma) combination of one orbit against a PR window."""

    orbit: PeriodicOrbit
    k: float
    n_bs: int
    sigma: float
    state: StateRecord | None
    overlap: float
    ranking: list[tuple[StateRecord, float]] = field(repr=False, default_factory=list)
    scan: list[dict] = field(repr=False, default_factory=list)


def best_scar_match(
    decomposition: SpectralDecomposition,
    orbit: PeriodicOrbit,
    pr_window: tuple[float, float],
    k_min: float = 0.3,
    k_max: float = 3.1,
    sigma_scales: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0),
    pr_values: np.ndarray | None = None,
    bounce_signs: dict[str, float] | None = None,
) -> ScarMatch:
    """Scan the quantized wavenumber ladder and a small sigma grid.

    Every admissible (k, sigma) pair is built and ranked; the returned
    match carries the best pair, its full ranking and the scan table.
    """
    prs = participation_ratios(decomposition) if pr_values is None else pr_values
    records = select_states(decomposition, pr_window, pr_values=prs)
    geometry = decomposition.geometry
    if not records:
        return ScarMatch(orbit=orbit, k=0.0, n_bs=0, sigma=0.0, state=None, overlap=0.0)
    indices = [r.index for r in records]
    vectors = decomposition.eigenvectors[:, indices]
    site_p = np.abs(vectors[0::2, :]) ** 2 + np.abs(vectors[1::2, :]) ** 2
    sqrt_p = np.sqrt(site_p)

    length = orbit.length
    n_lo = max(1, math.ceil(k_min * length / TWO_PI))
    n_hi = math.floor(k_max * length / TWO_PI)
    if n_hi < n_lo:
        raise ValueError(
            f"no quantized wavenumbers in [{k_min}, {k_max}] for orbit {orbit.name!r} "
            f"of length {length:.3f}"
        )
    best = None
    scan: list[dict] = []
    for n_bs in range(n_lo, n_hi + 1):
        k = TWO_PI * n_bs / length
        base_sigma = default_sigma(length, n_bs)
        for scale in sigma_scales:
            sigma = max(base_sigma * scale, 1.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                scar = build_scar_function(geometry, orbit, k, sigma, bounce_signs)
            overlaps = sqrt_p.T @ np.sqrt(scar.probability)
            j = int(np.argmax(overlaps))
            scan.append(
                {"k": k, "n_bs": n_bs, "sigma": sigma, "best_overlap": float(overlaps[j])}
            )
            if best is None or overlaps[j] > best[0]:
                ranked = sorted(zip(records, overlaps), key=lambda item: -item[1])
                best = (
                    float(overlaps[j]),
                    k,
                    n_bs,
                    sigma,
                    records[j],
                    [(rec, float(val)) for rec, val in ranked],
                )
    value, k, n_bs, sigma, record, ranking = best
    return ScarMatch(
        orbit=orbit,
        k=k,
        n_bs=n_bs,
        sigma=sigma,
        state=record,
        overlap=value,
        ranking=ranking,
        scan=scan,
    )
