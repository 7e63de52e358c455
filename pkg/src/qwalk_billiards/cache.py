"""On-disk cache for eigendecompositions, keyed by operator parameters."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .errors import CacheError
from .spectral import SpectralDecomposition, diagonalize
from .walker import WalkOperator

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def cache_path(cache_dir: Path, key: str) -> Path:
    return Path(cache_dir) / f"eig-{key}.npz"


def save_decomposition(path: Path, decomposition: SpectralDecomposition, key: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        version=np.int64(FORMAT_VERSION),
        key=np.str_(key),
        kind=np.str_(decomposition.geometry.kind.value),
        m_R=np.int64(decomposition.geometry.m_R),
        n_U=np.int64(decomposition.geometry.n_U),
        eigenphases=decomposition.eigenphases,
        eigenvectors=decomposition.eigenvectors,
        residuals=decomposition.residuals,
    )


def load_decomposition(path: Path, operator: WalkOperator, key: str) -> SpectralDecomposition:
    geometry = operator.geometry
    try:
        with np.load(path, allow_pickle=False) as data:
            if int(data["version"]) != FORMAT_VERSION:
                raise CacheError(f"{path}: unsupported cache version {data['version']}")
            if str(data["key"]) != key:
                raise CacheError(f"{path}: parameter hash mismatch")
            if (
                str(data["kind"]) != geometry.kind.value
                or int(data["m_R"]) != geometry.m_R
                or int(data["n_U"]) != geometry.n_U
            ):
                raise CacheError(f"{path}: geometry mismatch")
            phases = data["eigenphases"]
            vectors = data["eigenvectors"]
            residuals = data["residuals"]
    except CacheError:
        raise
    except Exception as exc:  # corrupted or truncated file
        raise CacheError(f"{path}: unreadable cache file ({exc})") from exc
    if vectors.shape != (geometry.dimension, geometry.dimension):
        raise CacheError(f"{path}: eigenvector shape {vectors.shape} does not fit the operator")
    return SpectralDecomposition(
        geometry=geometry, eigenphases=phases, eigenvectors=vectors, residuals=residuals
    )


def get_or_compute(
    cache_dir: Path | None, operator: WalkOperator
) -> tuple[SpectralDecomposition, bool]:
    """Load a cached decomposition or diagonalize and store it.

    Returns the decomposition and whether it was a cache hit.  Corrupted
    cache files trigger a recompute with a warning instead of failing.
    """
    if cache_dir is None:
        return diagonalize(operator), False
    key = operator.parameter_hash
    path = cache_path(cache_dir, key)
    if path.exists():
        try:
            return load_decomposition(path, operator, key), True
        except CacheError as exc:
            log.warning("cache miss, recomputing: %s", exc)
    decomposition = diagonalize(operator)
    save_decomposition(path, decomposition, key)
    return decomposition, False
