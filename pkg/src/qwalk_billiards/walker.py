"""Coin and shift operators of the alternating walk.

One time step is the sparse unitary ``Q = W_n (I x C2) W_m (I x C1)``:
a coin toss on the spin, a horizontal displacement conditioned on the
spin with a spin-flip reflection at the walls, a second coin toss and
the analogous vertical displacement.  The basis is site-major with the
spin as the fastest index (``index = 2 * site + spin``, spin 0 = up),
so coin factors are 2x2 diagonal blocks.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .geometry import GridGeometry

SPIN_UP = 0
SPIN_DOWN = 1

DEFAULT_COIN_PHASE = math.pi / 4


@dataclass(frozen=True)
class CoinParameters:
    """Angles of the two coins plus the symmetry-breaking phase.

    The phase multiplying the second row of each coin breaks the
    reflection symmetry of the eigenphase spectrum about the real axis;
    it defaults to pi/4 and both coins share it.
    """

    alpha: float
    beta: float
    phase: float = DEFAULT_COIN_PHASE

    def __post_init__(self) -> None:
        for name, angle in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.0 <= angle <= math.pi / 2:
                raise ConfigError(f"coin angle {name}={angle} outside [0, pi/2]")


def coin_matrix(angle: float, phase: float = DEFAULT_COIN_PHASE) -> np.ndarray:
    """2x2 SU(2) coin: [[cos, sin], [-e^{i phase} sin, e^{i phase} cos]]."""
    c, s = math.cos(angle), math.sin(angle)
    ph = complex(math.cos(phase), math.sin(phase))
    return np.array([[c, s], [-ph * s, ph * c]], dtype=np.complex128)


def _shift_matrix(geometry: GridGeometry, horizontal: bool) -> sp.csr_matrix:
    """Spin-conditioned displacement with spin-flip wall reflections.

    Up spins move toward larger coordinate and flip to down at the upper
    wall (``w(n)`` horizontally, ``f(m)`` vertically); down spins move
    toward the lower wall and flip to up there.  The result is a signless
    permutation of the spin x position basis, hence exactly unitary.
    """
    ms, ns = geometry.sites_m, geometry.sites_n
    idx = geometry.index_grid
    j = np.arange(geometry.site_count, dtype=np.int64)

    if horizontal:
        hi = np.asarray(geometry.w, dtype=np.int64)[ns]
        lo = np.asarray(geometry.w_lo, dtype=np.int64)[ns]
        coord = ms
        fwd = idx[ns, np.minimum(ms + 1, geometry.m_R)]
        bwd = idx[ns, np.maximum(ms - 1, 0)]
    else:
        hi = np.asarray(geometry.f, dtype=np.int64)[ms]
        lo = np.asarray(geometry.f_lo, dtype=np.int64)[ms]
        coord = ns
        fwd = idx[np.minimum(ns + 1, geometry.n_U), ms]
        bwd = idx[np.maximum(ns - 1, 0), ms]

    at_top = coord == hi
    at_bottom = coord == lo
    # up spin: advance, or flip to down in place at the upper wall
    rows_up = np.where(at_top, 2 * j + 1, 2 * fwd)
    # down spin: retreat, or flip to up in place at the lower wall
    rows_down = np.where(at_bottom, 2 * j, 2 * bwd + 1)

    rows = np.concatenate([rows_up, rows_down])
    cols = np.concatenate([2 * j, 2 * j + 1])
    data = np.ones(rows.size, dtype=np.complex128)
    dim = geometry.dimension
    return sp.coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()


def build_shift_horizontal(geometry: GridGeometry) -> sp.csr_matrix:
    return _shift_matrix(geometry, horizontal=True)


def build_shift_vertical(geometry: GridGeometry) -> sp.csr_matrix:
    return _shift_matrix(geometry, horizontal=False)


def coin_factor(geometry: GridGeometry, angle: float, phase: float) -> sp.csr_matrix:
    """The coin acting identically on every site: I_sites x C."""
    return sp.kron(
        sp.identity(geometry.site_count, format="csr"),
        sp.csr_matrix(coin_matrix(angle, phase)),
        format="csr",
    )


@dataclass(frozen=True, eq=False)
class WalkOperator:
    """One-step evolution operator and its four factors."""

    geometry: GridGeometry
    coins: CoinParameters
    matrix: sp.csr_matrix
    c1: sp.csr_matrix = field(repr=False)
    w_m: sp.csr_matrix = field(repr=False)
    c2: sp.csr_matrix = field(repr=False)
    w_n: sp.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    @property
    def parameter_hash(self) -> str:
        return parameter_hash(self.geometry, self.coins)

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """One walk step on a raw amplitude vector."""
        if amplitudes.shape != (self.dimension,):
            raise ValueError(
                f"state has shape {amplitudes.shape}, operator needs ({self.dimension},)"
            )
        return self.matrix @ amplitudes

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def parameter_hash(geometry: GridGeometry, coins: CoinParameters) -> str:
    """Stable digest of everything the operator depends on."""
    key = (
        f"{geometry.kind.value}:{geometry.m_R}:{geometry.n_U}"
        f":{coins.alpha!r}:{coins.beta!r}:{coins.phase!r}"
    )
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def build_step_operator(geometry: GridGeometry, coins: CoinParameters) -> WalkOperator:
    c1 = coin_factor(geometry, coins.alpha, coins.phase)
    w_m = build_shift_horizontal(geometry)
    c2 = coin_factor(geometry, coins.beta, coins.phase)
    w_n = build_shift_vertical(geometry)
    matrix = (w_n @ (c2 @ (w_m @ c1))).tocsr()
    matrix.sort_indices()
    return WalkOperator(geometry=geometry, coins=coins, matrix=matrix, c1=c1, w_m=w_m, c2=c2, w_n=w_n)


def unitarity_defect(matrix: sp.spmatrix) -> float:
    """max |Q^dagger Q - I|, entrywise."""
    dim = matrix.shape[0]
    defect = (matrix.getH() @ matrix - sp.identity(dim, dtype=np.complex128)).tocoo()
    if defect.nnz == 0:
        return 0.0
    return float(np.abs(defect.data).max())


def export_operator(operator: WalkOperator, path) -> None:
    """Dump the sparse matrix as 'row col re im' lines for debugging."""
    coo = operator.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dim={operator.dimension} params={operator.parameter_hash}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")


def read_operator_entries(path) -> tuple[int, str, sp.csr_matrix]:
    """Inverse of export_operator; returns (dimension, hash, matrix)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        fields = dict(item.split("=") for item in header.lstrip("# ").split())
        dim = int(fields["dim"])
        rows, cols, data = [], [], []
        for line in fh:
            r, c, re, im = line.split()
            rows.append(int(r))
            cols.append(int(c))
            data.append(complex(float(re), float(im)))
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()
    return dim, fields["params"], matrix
