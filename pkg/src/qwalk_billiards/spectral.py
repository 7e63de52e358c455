"""Eigenphase statistics: unfolding, spacing histograms and Brody fits.

The one-step operator is unitary, so its spectrum lives on the unit
circle.  Nearest-neighbor spacings of the sorted eigenphases (including
the wrap-around gap, so N phases give N spacings) are unfolded to unit
mean and compared against the Wigner surmise, the Poisson law and the
interpolating Brody distribution

    P_B(s) = a s^delta exp(-b s^(delta+1)),
    b = Gamma((delta+2)/(delta+1))^(delta+1),  a = (delta+1) b,

whose delta = 0 and delta = 1 endpoints are exactly Poisson and Wigner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .errors import ConfigError, NumericalError
from .geometry import GridGeometry
from .walker import WalkOperator

TWO_PI = 2.0 * math.pi

UNIMODULAR_TOL = 1e-8
RESIDUAL_TOL = 1e-8
DEFAULT_DIMENSION_CAP = 10_000
DEFAULT_BIN_COUNT = 30
DEFAULT_S_MAX = 4.0


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Sorted eigenphases in [0, 2pi) with paired eigenvector columns."""

    geometry: GridGeometry
    eigenphases: np.ndarray  # sorted ascending, in [0, 2pi)
    eigenvectors: np.ndarray  # column j pairs with eigenphases[j], unit norm
    residuals: np.ndarray  # ||Q v - e^{i theta} v|| per pair

    @property
    def size(self) -> int:
        return self.eigenphases.size

    def wrapped_phases(self) -> np.ndarray:
        """Eigenphases mapped to (-pi, pi], the convention used in reports."""
        phases = self.eigenphases.copy()
        phases[phases > math.pi] -= TWO_PI
        return phases


def diagonalize(
    operator: WalkOperator, dimension_cap: int = DEFAULT_DIMENSION_CAP
) -> SpectralDecomposition:
    """Dense eigendecomposition of the one-step unitary.

    Ordering is deterministic (ascending eigenphase, stable sort) and
    near-degenerate clusters are re-orthonormalized so that V Lambda V^H
    reconstructs the operator.
    """
    dim = operator.dimension
    if dim > dimension_cap:
        raise ConfigError(f"dimension {dim} exceeds the diagonalization cap {dimension_cap}")

    try:
        values, vectors = np.linalg.eig(operator.to_dense())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc

    moduli_dev = np.abs(np.abs(values) - 1.0)
    if moduli_dev.max() > UNIMODULAR_TOL:
        raise NumericalError(
            f"eigenvalues deviate from the unit circle by {moduli_dev.max():.3e}"
        )

    phases = np.angle(values) % TWO_PI
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    vectors = vectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    _orthonormalize_clusters(phases, vectors)

    eigvals = np.exp(1j * phases)
    residual_vecs = operator.matrix @ vectors - vectors * eigvals
    residuals = np.linalg.norm(residual_vecs, axis=0)
    if residuals.max() > RESIDUAL_TOL:
        worst = int(np.argmax(residuals))
        raise NumericalError(
            f"eigenpair {worst} has residual {residuals[worst]:.3e} "
            f"(max allowed {RESIDUAL_TOL:.0e})"
        )
    return SpectralDecomposition(
        geometry=operator.geometry,
        eigenphases=phases,
        eigenvectors=vectors,
        residuals=residuals,
    )


def _orthonormalize_clusters(
    phases: np.ndarray, vectors: np.ndarray, gap: float = 1e-10
) -> None:
    """QR-orthonormalize eigenvector groups with near-equal phases, in place."""
    start = 0
    n = phases.size
    for i in range(1, n + 1):
        if i == n or phases[i] - phases[i - 1] > gap:
            if i - start > 1:
                q, _ = np.linalg.qr(vectors[:, start:i])
                vectors[:, start:i] = q
            start = i


def reconstruction_defect(operator: WalkOperator, decomposition: SpectralDecomposition) -> float:
    """max |Q - V Lambda V^H| for a full decomposition."""
    v = decomposition.eigenvectors
    rebuilt = (v * np.exp(1j * decomposition.eigenphases)) @ v.conj().T
    return float(np.abs(operator.to_dense() - rebuilt).max())


def unfold_spacings(eigenphases: np.ndarray) -> np.ndarray:
    """Nearest-neighbor spacings rescaled to unit mean.

    Includes the wrap-around gap between the last and first phase, so the
    spacings sum to 2 pi exactly and the unfolded mean is 1 by construction.
    """
    phases = np.asarray(eigenphases, dtype=float)
    if phases.ndim != 1 or phases.size < 2:
        raise ValueError("need at least two eigenphases to form spacings")
    if np.any(np.diff(phases) < 0):
        raise ValueError("eigenphases must be sorted ascending")
    if phases[0] < 0 or phases[-1] >= TWO_PI:
        raise ValueError("eigenphases must lie in [0, 2pi)")
    gaps = np.diff(phases)
    wrap = phases[0] + TWO_PI - phases[-1]
    spacings = np.concatenate([gaps, [wrap]])
    return spacings * (phases.size / TWO_PI)


def wigner_pdf(s):
    """Wigner surmise (pi/2) s exp(-pi s^2 / 4)."""
    s = np.asarray(s, dtype=float)
    _check_nonnegative(s)
    return (math.pi / 2.0) * s * np.exp(-math.pi * s * s / 4.0)


def poisson_pdf(s):
    s = np.asarray(s, dtype=float)
    _check_nonnegative(s)
    return np.exp(-s)


def brody_pdf(s, delta):
    """Brody density interpolating Poisson (delta=0) to Wigner (delta=1)."""
    s = np.asarray(s, dtype=float)
    _check_nonnegative(s)
    delta = np.asarray(delta, dtype=float)
    if np.any((delta < 0.0) | (delta > 1.0)):
        raise ValueError("delta must lie in [0, 1]")
    b = _gamma((delta + 2.0) / (delta + 1.0)) ** (delta + 1.0)
    a = (delta + 1.0) * b
    return a * np.power(s, delta) * np.exp(-b * np.power(s, delta + 1.0))


def _check_nonnegative(s: np.ndarray) -> None:
    if np.any(s < 0):
        raise ValueError("spacings must be non-negative")


@dataclass(frozen=True, eq=False)
class SpacingHistogram:
    """Density-normalized spacing histogram on [0, s_max].

    Spacings beyond s_max are folded into the last bin so the density
    integrates to 1 exactly; their count is kept as a flag.
    """

    spacings: np.ndarray
    bin_edges: np.ndarray
    density: np.ndarray
    overflow_count: int

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.bin_edges)))

    def write_csv(self, path, config_hash: str | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if config_hash is not None:
                fh.write(f"# config={config_hash}\n")
            fh.write("bin_left,bin_right,bin_center,density\n")
            for left, right, center, rho in zip(
                self.bin_edges[:-1], self.bin_edges[1:], self.bin_centers, self.density
            ):
                fh.write(f"{float(left)!r},{float(right)!r},{float(center)!r},{float(rho)!r}\n")


def spacing_histogram(
    spacings: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
    s_max: float = DEFAULT_S_MAX,
) -> SpacingHistogram:
    spacings = np.asarray(spacings, dtype=float)
    if spacings.size == 0:
        raise ValueError("cannot histogram an empty spacing list")
    if bin_count < 5:
        raise ValueError(f"bin_count must be at least 5, got {bin_count}")
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    overflow = int(np.count_nonzero(spacings > s_max))
    clipped = np.minimum(spacings, np.nextafter(s_max, 0.0))
    counts, edges = np.histogram(clipped, bins=bin_count, range=(0.0, s_max))
    width = edges[1] - edges[0]
    density = counts / (spacings.size * width)
    return SpacingHistogram(
        spacings=spacings, bin_edges=edges, density=density, overflow_count=overflow
    )


def rms_error(histogram: SpacingHistogram, pdf) -> float:
    """Root mean square deviation between bin densities and pdf(bin centers)."""
    values = pdf(histogram.bin_centers)
    return float(np.sqrt(np.mean((histogram.density - values) ** 2)))


@dataclass(frozen=True)
class BrodyFit:
    """Least-squares Brody exponent plus reference errors at the same bins."""

    delta: float
    rms_brody: float
    rms_wigner: float
    rms_poisson: float

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "rms_brody": self.rms_brody,
            "rms_wigner": self.rms_wigner,
            "rms_poisson": self.rms_poisson,
        }


def fit_brody(histogram: SpacingHistogram, delta_step: float = 0.001) -> BrodyFit:
    """Dense scan of delta in [0, 1] minimizing the RMS histogram error.

    A 1D scan at step 0.001 is cheap and immune to the local minima a
    noisy histogram can induce in iterative least squares.
    """
    if histogram.density.size < 2:
        raise ValueError("histogram is degenerate (fewer than two bins)")
    centers = histogram.bin_centers
    deltas = np.arange(0.0, 1.0 + delta_step / 2.0, delta_step)
    table = brody_pdf(centers[None, :], deltas[:, None])
    errors = np.sqrt(np.mean((table - histogram.density[None, :]) ** 2, axis=1))
    best = int(np.argmin(errors))
    return BrodyFit(
        delta=float(deltas[best]),
        rms_brody=float(errors[best]),
        rms_wigner=rms_error(histogram, wigner_pdf),
        rms_poisson=rms_error(histogram, poisson_pdf),
    )
