"""Alternating 2D quantum walk on billiard grids with chaoticity diagnostics."""

__version__ = "0.1.0"

from .geometry import DomainKind, GridGeometry, build_geometry
from .walker import CoinParameters, WalkOperator, build_step_operator, coin_matrix
from .dynamics import ProbabilityGrid, WalkerState, centered_initial_state, evolve, probability_grid
from .spectral import (
    BrodyFit,
    SpacingHistogram,
    SpectralDecomposition,
    brody_pdf,
    diagonalize,
    fit_brody,
    poisson_pdf,
    rms_error,
    spacing_histogram,
    unfold_spacings,
    wigner_pdf,
)
from .localization import (
    PRReport,
    eigenstate_probability,
    participation_ratio,
    participation_ratios,
    pr_histogram,
    pr_report,
    select_states,
)
from .scars import (
    PeriodicOrbit,
    ScarFunction,
    best_scar_match,
    build_scar_function,
    default_orbit_library,
    overlap,
    quantize_wavenumber,
    rank_candidates,
)

__all__ = [
    "__version__",
    "DomainKind",
    "GridGeometry",
    "build_geometry",
    "CoinParameters",
    "WalkOperator",
    "build_step_operator",
    "coin_matrix",
    "ProbabilityGrid",
    "WalkerState",
    "centered_initial_state",
    "evolve",
    "probability_grid",
    "BrodyFit",
    "SpacingHistogram",
    "SpectralDecomposition",
    "brody_pdf",
    "diagonalize",
    "fit_brody",
    "poisson_pdf",
    "rms_error",
    "spacing_histogram",
    "unfold_spacings",
    "wigner_pdf",
    "PRReport",
    "eigenstate_probability",
    "participation_ratio",
    "participation_ratios",
    "pr_histogram",
    "pr_report",
    "select_states",
    "PeriodicOrbit",
    "ScarFunction",
    "best_scar_match",
    "build_scar_function",
    "default_orbit_library",
    "overlap",
    "quantize_wavenumber",
    "rank_candidates",
]
