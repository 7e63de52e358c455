"""Participation ratios and eigenstate selection.

PR = 1 / sum_i |c_i|^4 over all spin x position components of a
normalized eigenvector: 1 for a basis state, the full dimension for a
flat state, and roughly the number of basis elements an eigenfunction
occupies in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ProbabilityGrid
from .spectral import SpectralDecomposition

PR_NORM_TOL = 1e-8


def participation_ratio(eigenvector: np.ndarray) -> float:
    """Inverse sum of fourth powers of the amplitude moduli."""
    vec = np.asarray(eigenvector)
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > PR_NORM_TOL:
        raise ValueError(f"eigenvector norm {nrm} drifts beyond {PR_NORM_TOL} from 1")
    vec = vec / nrm
    return float(1.0 / np.sum(np.abs(vec) ** 4))


def participation_ratios(decomposition: SpectralDecomposition) -> np.ndarray:
    """PR of every eigenvector column (vectorized)."""
    v = decomposition.eigenvectors
    norms = np.linalg.norm(v, axis=0)
    if np.any(np.abs(norms - 1.0) > PR_NORM_TOL):
        raise ValueError("eigenvector columns drift from unit norm")
    quartic = np.sum(np.abs(v / norms) ** 4, axis=0)
    return 1.0 / quartic


@dataclass(frozen=True, eq=False)
class PRReport:
    """Per-eigenstate (eigenphase, PR) records plus summary statistics."""

    eigenphases: np.ndarray  # wrapped to (-pi, pi]
    pr: np.ndarray
    dimension: int

    @property
    def mean(self) -> float:
        return float(self.pr.mean())

    @property
    def median(self) -> float:
        return float(np.median(self.pr))

    def write_csv(self, path, config_hash: str | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if config_hash is not None:
                fh.write(f"# config={config_hash}\n")
            fh.write("index,eigenphase,pr\n")
            for i, (phase, pr) in enumerate(zip(self.eigenphases, self.pr)):
                fh.write(f"{i},{float(phase)!r},{float(pr)!r}\n")


def pr_report(decomposition: SpectralDecomposition) -> PRReport:
    return PRReport(
        eigenphases=decomposition.wrapped_phases(),
        pr=participation_ratios(decomposition),
        dimension=decomposition.eigenvectors.shape[0],
    )


@dataclass(frozen=True, eq=False)
class PRHistogram:
    bin_edges: np.ndarray
    density: np.ndarray

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.bin_edges)))


def pr_histogram(report: PRReport, bin_count: int = 30) -> PRHistogram:
    """Density histogram of the PR values over [1, dimension]."""
    if report.pr.size == 0:
        raise ValueError("cannot histogram an empty PR report")
    counts, edges = np.histogram(report.pr, bins=bin_count, range=(1.0, float(report.dimension)))
    width = np.diff(edges)
    density = counts / (report.pr.size * width)
    return PRHistogram(bin_edges=edges, density=density)


@dataclass(frozen=True)
class StateRecord:
    index: int
    eigenphase: float  # wrapped to (-pi, pi]
    pr: float


def select_states(
    decomposition: SpectralDecomposition,
    pr_range: tuple[float, float],
    phase_range: tuple[float, float] = (-math.pi, math.pi),
    pr_values: np.ndarray | None = None,
) -> list[StateRecord]:
    """All states inside both windows, sorted by PR.

    The phase window is interpreted in the wrapped (-pi, pi] convention.
    """
    lo, hi = pr_range
    if lo > hi:
        raise ValueError(f"empty PR range [{lo}, {hi}]")
    phase_lo, phase_hi = phase_range
    if phase_lo > phase_hi:
        raise ValueError(f"empty phase range [{phase_lo}, {phase_hi}]")
    prs = participation_ratios(decomposition) if pr_values is None else pr_values
    phases = decomposition.wrapped_phases()
    keep = (prs >= lo) & (prs <= hi) & (phases >= phase_lo) & (phases <= phase_hi)
    records = [
        StateRecord(index=int(i), eigenphase=float(phases[i]), pr=float(prs[i]))
        for i in np.nonzero(keep)[0]
    ]
    records.sort(key=lambda r: r.pr)
    return records


def eigenstate_probability(decomposition: SpectralDecomposition, index: int) -> ProbabilityGrid:
    """Spin-summed site probabilities of one eigenvector."""
    if not 0 <= index < decomposition.size:
        raise ValueError(f"eigenstate index {index} outside [0, {decomposition.size})")
    vec = decomposition.eigenvectors[:, index]
    vec = vec / np.linalg.norm(vec)
    p = np.abs(vec[0::2]) ** 2 + np.abs(vec[1::2]) ** 2
    return ProbabilityGrid(geometry=decomposition.geometry, p=p)
