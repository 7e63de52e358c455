"""Discrete billiard domains on an integer grid.

A geometry is the set of lattice sites ``(m, n)`` enclosed by a hard-wall
billiard: the full rectangle ``0 <= m <= m_R``, ``0 <= n <= n_U``, the
desymmetrized quarter of a Bunimovich stadium, or the full stadium
inscribed in that rectangle.  Each column ``m`` carries a row interval
``[f_lo(m), f(m)]`` and each row ``n`` a column interval
``[w_lo(n), w(n)]``; the two descriptions are exactly dual on integers
(``f_lo(m) <= n <= f(m)`` iff ``w_lo(n) <= m <= w(n)``), which is what
the reflecting shift operators need to stay unitary.  Arc bounds use
floor/ceil of exact integer square roots, so the duality carries no
floating-point risk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ConfigError


class DomainKind(str, Enum):
    RECTANGLE = "rectangle"
    QUARTER_STADIUM = "quarter_stadium"
    FULL_STADIUM = "full_stadium"


@dataclass(frozen=True, eq=False)
class GridGeometry:
    """Immutable site set of a billiard grid plus its shape tables."""

    kind: DomainKind
    m_R: int
    n_U: int
    m_C: int  # last column of the flat zone; the arc begins past it
    f: tuple[int, ...]  # topmost n per column, length m_R + 1
    f_lo: tuple[int, ...]  # bottommost n per column (0 except full stadium)
    w: tuple[int, ...]  # rightmost m per row, length n_U + 1
    w_lo: tuple[int, ...]  # leftmost m per row (0 except full stadium)
    sites: tuple[tuple[int, int], ...]  # row-major: n outer, m inner
    index_of: dict[tuple[int, int], int]

    @property
    def site_count(self) -> int:
        return len(self.sites)

    @property
    def dimension(self) -> int:
        """Size of the spin x position basis."""
        return 2 * len(self.sites)

    @cached_property
    def sites_m(self) -> np.ndarray:
        return np.array([m for m, _ in self.sites], dtype=np.int64)

    @cached_property
    def sites_n(self) -> np.ndarray:
        return np.array([n for _, n in self.sites], dtype=np.int64)

    @cached_property
    def index_grid(self) -> np.ndarray:
        """(n_U+1, m_R+1) array of site indices, -1 outside the domain."""
        grid = np.full((self.n_U + 1, self.m_R + 1), -1, dtype=np.int64)
        grid[self.sites_n, self.sites_m] = np.arange(self.site_count)
        return grid

    def contains(self, m: int, n: int) -> bool:
        if not (0 <= m <= self.m_R and 0 <= n <= self.n_U):
            return False
        return self.f_lo[m] <= n <= self.f[m]

    def site_index(self, m: int, n: int) -> int:
        try:
            return self.index_of[(m, n)]
        except KeyError:
            raise ValueError(f"({m}, {n}) is not a site of this {self.kind.value}") from None

    def shape_f(self, m: int) -> int:
        """Topmost row of column m (-1 marks an empty column)."""
        if not 0 <= m <= self.m_R:
            raise ValueError(f"column {m} outside [0, {self.m_R}]")
        return self.f[m] if self.f_lo[m] <= self.f[m] else -1

    def shape_w(self, n: int) -> int:
        if not 0 <= n <= self.n_U:
            raise ValueError(f"row {n} outside [0, {self.n_U}]")
        return self.w[n] if self.w_lo[n] <= self.w[n] else -1

    def boundary_height(self, x: float) -> float:
        """Real-valued top boundary of the continuum billiard at abscissa x."""
        if self.kind is DomainKind.RECTANGLE:
            return float(self.n_U)
        if self.kind is DomainKind.QUARTER_STADIUM:
            if x <= self.m_C:
                return float(self.n_U)
            return math.sqrt(max(self.n_U**2 - (x - self.m_C) ** 2, 0.0))
        r = self.n_U / 2.0
        dx = abs(x - self.m_R / 2.0) - r
        if dx <= 0.0:
            return float(self.n_U)
        return r + math.sqrt(max(r * r - dx * dx, 0.0))

    def contains_point(self, x: float, y: float, tol: float = 1e-9) -> bool:
        """Continuum membership test used for orbit vertices."""
        if x < -tol or x > self.m_R + tol or y < -tol or y > self.n_U + tol:
            return False
        x = min(max(x, 0.0), float(self.m_R))
        top = self.boundary_height(x)
        if self.kind is DomainKind.FULL_STADIUM:
            return float(self.n_U) - top - tol <= y <= top + tol
        return y <= top + tol

    def summary(self) -> dict:
        """JSON-ready description for reproducibility manifests."""
        return {
            "kind": self.kind.value,
            "m_R": self.m_R,
            "n_U": self.n_U,
            "m_C": self.m_C,
            "site_count": self.site_count,
            "f": list(self.f),
            "f_lo": list(self.f_lo),
            "w": list(self.w),
            "w_lo": list(self.w_lo),
        }

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _stadium_tables(n_U: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Integer shape tables of the full stadium inscribed in (2 n_U, n_U).

    The symmetry center sits at (n_U, n_U/2) and the arc radius is n_U/2,
    both possibly half-integers; all bounds are computed in doubled units
    so the floor/ceil of the square roots stay exact.
    """
    m_R = 2 * n_U
    f_hi, f_lo = [], []
    for m in range(m_R + 1):
        dx2 = 2 * abs(m - n_U) - n_U  # doubled distance past the flat zone
        if dx2 <= 0:
            f_hi.append(n_U)
            f_lo.append(0)
        elif dx2 > n_U:
            f_hi.append(-1)
            f_lo.append(0)  # empty column: lo > hi
        else:
            q = math.isqrt(n_U * n_U - dx2 * dx2)
            hi = (n_U + q) // 2
            f_hi.append(hi)
            f_lo.append(n_U - hi)
    w_hi, w_lo = [], []
    for n in range(n_U + 1):
        dy2 = abs(2 * n - n_U)
        q = math.isqrt(n_U * n_U - dy2 * dy2)
        hi = (3 * n_U + q) // 2
        w_hi.append(hi)
        w_lo.append(2 * n_U - hi)
    return tuple(f_hi), tuple(f_lo), tuple(w_hi), tuple(w_lo)


def build_geometry(kind: DomainKind | str, m_R: int, n_U: int) -> GridGeometry:
    """Construct a billiard grid and enumerate its sites.

    Sites are listed in row-major order (n outer, m inner) so that basis
    indices are stable across runs and cached eigenvectors stay portable.
    """
    kind = DomainKind(kind)
    if m_R < 2 or n_U < 1:
        raise ConfigError(f"grid too small: m_R={m_R}, n_U={n_U}")
    if kind is DomainKind.RECTANGLE:
        m_C = m_R
        f = tuple(n_U for _ in range(m_R + 1))
        f_lo = tuple(0 for _ in range(m_R + 1))
        w = tuple(m_R for _ in range(n_U + 1))
        w_lo = tuple(0 for _ in range(n_U + 1))
    else:
        if m_R % 2 != 0:
            raise ConfigError(f"stadium domains need an even m_R, got {m_R}")
        if n_U != m_R // 2:
            raise ConfigError(f"stadium domains need n_U = m_R/2, got n_U={n_U}, m_R={m_R}")
        if kind is DomainKind.QUARTER_STADIUM:
            m_C = m_R // 2
            # isqrt is the exact integer floor of the square root.
            f = tuple(
                n_U if m <= m_C else math.isqrt(n_U * n_U - (m - m_C) ** 2)
                for m in range(m_R + 1)
            )
            f_lo = tuple(0 for _ in range(m_R + 1))
            w = tuple(m_C + math.isqrt(n_U * n_U - n * n) for n in range(n_U + 1))
            w_lo = tuple(0 for _ in range(n_U + 1))
        else:
            m_C = (3 * n_U) // 2
            f, f_lo, w, w_lo = _stadium_tables(n_U)

    sites = tuple(
        (m, n) for n in range(n_U + 1) for m in range(w_lo[n], w[n] + 1)
    )
    index_of = {site: i for i, site in enumerate(sites)}
    return GridGeometry(
        kind=kind,
        m_R=m_R,
        n_U=n_U,
        m_C=m_C,
        f=f,
        f_lo=f_lo,
        w=w,
        w_lo=w_lo,
        sites=sites,
        index_of=index_of,
    )


def shape_f(geometry: GridGeometry, m: int) -> int:
    return geometry.shape_f(m)


def shape_w(geometry: GridGeometry, n: int) -> int:
    return geometry.shape_w(n)
