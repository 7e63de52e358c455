"""Walker states, time evolution and probability snapshots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GridGeometry
from .walker import WalkOperator

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WalkerState:
    """Complex amplitude pair (up, down) per site, unit norm."""

    geometry: GridGeometry
    amplitudes: np.ndarray  # length 2 * site_count, spin fastest

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def up(self) -> np.ndarray:
        return self.amplitudes[0::2]

    @property
    def down(self) -> np.ndarray:
        return self.amplitudes[1::2]


@dataclass(frozen=True, eq=False)
class ProbabilityGrid:
    """Per-site probability |up|^2 + |down|^2; zero off the domain."""

    geometry: GridGeometry
    p: np.ndarray  # length site_count

    def total(self) -> float:
        return float(self.p.sum())

    def to_dense(self) -> np.ndarray:
        """(n_U+1, m_R+1) array with zeros outside the billiard."""
        g = self.geometry
        dense = np.zeros((g.n_U + 1, g.m_R + 1))
        dense[g.sites_n, g.sites_m] = self.p
        return dense

    def max_abs_diff(self, other: "ProbabilityGrid") -> float:
        return float(np.abs(self.to_dense() - other.to_dense()).max())

    def l1_distance(self, other: "ProbabilityGrid") -> float:
        return float(np.abs(self.to_dense() - other.to_dense()).sum())

    def write_csv(self, path, config_hash: str | None = None) -> None:
        g = self.geometry
        with open(path, "w", encoding="utf-8") as fh:
            if config_hash is not None:
                fh.write(f"# config={config_hash}\n")
            fh.write("m,n,p\n")
            for (m, n), value in zip(g.sites, self.p):
                fh.write(f"{m},{n},{float(value)!r}\n")


def centered_initial_state(
    geometry: GridGeometry,
    m0: int,
    n0: int,
    up_amp: complex,
    down_amp: complex,
) -> WalkerState:
    """Single-site state with the given spinor at (m0, n0)."""
    if not geometry.contains(m0, n0):
        raise ValueError(f"start site ({m0}, {n0}) is outside the domain")
    weight = abs(up_amp) ** 2 + abs(down_amp) ** 2
    if abs(weight - 1.0) > NORM_TOL:
        raise ValueError(f"spinor norm^2 = {weight}, expected 1")
    amplitudes = np.zeros(geometry.dimension, dtype=np.complex128)
    j = geometry.site_index(m0, n0)
    amplitudes[2 * j] = up_amp
    amplitudes[2 * j + 1] = down_amp
    return WalkerState(geometry=geometry, amplitudes=amplitudes)


def probability_grid(state: WalkerState) -> ProbabilityGrid:
    p = np.abs(state.up) ** 2 + np.abs(state.down) ** 2
    return ProbabilityGrid(geometry=state.geometry, p=p)


def evolve(
    state: WalkerState,
    operator: WalkOperator,
    steps: int,
    snapshot_times: list[int] | tuple[int, ...] = (),
) -> tuple[list[tuple[int, ProbabilityGrid]], WalkerState]:
    """Apply the step operator repeatedly, recording requested snapshots.

    Snapshot at time t is taken after exactly t applications; t = 0 is the
    initial state.  Returns the snapshots and the final state.
    """
    times = list(snapshot_times)
    if times != sorted(times) or len(set(times)) != len(times):
        raise ValueError("snapshot_times must be sorted and unique")
    if times and (times[0] < 0 or times[-1] > steps):
        raise ValueError(f"snapshot_times must lie in [0, {steps}]")
    if operator.geometry is not state.geometry and operator.dimension != state.amplitudes.size:
        raise ValueError("operator and state dimensions do not match")

    snapshots: list[tuple[int, ProbabilityGrid]] = []
    wanted = set(times)
    amps = state.amplitudes
    if 0 in wanted:
        snapshots.append((0, probability_grid(state)))
    for t in range(1, steps + 1):
        amps = operator.apply(amps)
        if t in wanted:
            snapshots.append(
                (t, probability_grid(WalkerState(geometry=state.geometry, amplitudes=amps)))
            )
    return snapshots, WalkerState(geometry=state.geometry, amplitudes=amps)
