import math

import pytest

from qwalk_billiards.geometry import build_geometry
from qwalk_billiards.spectral import diagonalize
from qwalk_billiards.walker import CoinParameters, build_step_operator

SYMMETRIC = (math.pi / 4, math.pi / 4)
ASYMMETRIC = (math.pi / 4, math.pi / 3)


@pytest.fixture(scope="session")
def spectra():
    """Lazily computed (geometry, operator, decomposition) per configuration.

    The 50x25 eigendecompositions cost tens of seconds each, so they are
    shared across every test module in the session.
    """
    cache = {}

    def get(kind, angles=SYMMETRIC, size=(50, 25)):
        key = (kind, angles, size)
        if key not in cache:
            geometry = build_geometry(kind, *size)
            operator = build_step_operator(geometry, CoinParameters(*angles))
            cache[key] = (geometry, operator, diagonalize(operator))
        return cache[key]

    return get
