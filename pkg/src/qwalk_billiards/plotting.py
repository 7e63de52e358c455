"""Figure rendering (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import ProbabilityGrid
from .localization import PRHistogram
from .spectral import BrodyFit, SpacingHistogram, brody_pdf, poisson_pdf, wigner_pdf


def save_heatmap(grid: ProbabilityGrid, path, title: str | None = None) -> None:
    """Per-frame normalized probability heatmap; off-domain cells are blank."""
    g = grid.geometry
    dense = grid.to_dense()
    mask = g.index_grid < 0
    data = np.ma.masked_where(mask, dense)
    peak = float(dense.max())
    fig, ax = plt.subplots(figsize=(8, 4.5))
    cmap = plt.get_cmap("inferno").copy()
    cmap.set_bad("lightgray")
    im = ax.imshow(
        data,
        origin="lower",
        cmap=cmap,
        vmin=0.0,
        vmax=peak if peak > 0 else 1.0,
        extent=(-0.5, g.m_R + 0.5, -0.5, g.n_U + 0.5),
        interpolation="nearest",
    )
    ax.set_xlabel("m")
    ax.set_ylabel("n")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="probability")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_spacing_plot(
    histogram: SpacingHistogram, fit: BrodyFit, path, title: str | None = None
) -> None:
    """Histogram bars overlaid with the Brody, Wigner and Poisson curves."""
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.bar(
        histogram.bin_centers,
        histogram.density,
        width=histogram.bin_width,
        color="lightsteelblue",
        edgecolor="gray",
        label="unfolded spacings",
    )
    s = np.linspace(0.0, histogram.bin_edges[-1], 400)
    ax.plot(s, brody_pdf(s, fit.delta), "r-", label=f"Brody (delta={fit.delta:.3f})")
    ax.plot(s, wigner_pdf(s), "b--", label="Wigner")
    ax.plot(s, poisson_pdf(s), "g:", label="Poisson")
    ax.set_xlabel("s")
    ax.set_ylabel("P(s)")
    ax.set_xlim(0.0, histogram.bin_edges[-1])
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_pr_histogram(histogram: PRHistogram, path, title: str | None = None) -> None:
    centers = 0.5 * (histogram.bin_edges[:-1] + histogram.bin_edges[1:])
    widths = np.diff(histogram.bin_edges)
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ax.bar(centers, histogram.density, width=widths, color="thistle", edgecolor="gray")
    ax.set_xlabel("PR")
    ax.set_ylabel("P(PR)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
