import math

import numpy as np
import pytest

from qwalk_billiards.dynamics import (
    WalkerState,
    centered_initial_state,
    evolve,
    probability_grid,
)
from qwalk_billiards.geometry import build_geometry
from qwalk_billiards.walker import CoinParameters, build_step_operator

SYM = CoinParameters(math.pi / 4, math.pi / 4)
SPIN_UP = 1 / math.sqrt(2)
SPIN_DOWN = 1j / math.sqrt(2)


def test_initial_state_normalized():
    g = build_geometry("rectangle", 10, 5)
    state = centered_initial_state(g, 5, 2, SPIN_UP, SPIN_DOWN)
    assert abs(state.norm() - 1.0) < 1e-15
    grid = probability_grid(state)
    assert abs(grid.p[g.site_index(5, 2)] - 1.0) < 1e-15


def test_initial_state_off_domain():
    g = build_geometry("quarter_stadium", 10, 5)
    with pytest.raises(ValueError):
        centered_initial_state(g, 10, 5, SPIN_UP, SPIN_DOWN)
    with pytest.raises(ValueError):
        centered_initial_state(g, 200, 0, SPIN_UP, SPIN_DOWN)


def test_initial_state_spinor_norm():
    g = build_geometry("rectangle", 10, 5)
    with pytest.raises(ValueError):
        centered_initial_state(g, 5, 2, 1.0, 0.5)


def test_snapshot_zero_is_initial_grid():
    g = build_geometry("rectangle", 8, 4)
    op = build_step_operator(g, SYM)
    state = centered_initial_state(g, 4, 2, SPIN_UP, SPIN_DOWN)
    snapshots, _ = evolve(state, op, steps=3, snapshot_times=[0, 3])
    assert snapshots[0][0] == 0
    assert np.array_equal(snapshots[0][1].p, probability_grid(state).p)


def test_basis_state_gives_delta_grid():
    g = build_geometry("rectangle", 8, 4)
    state = centered_initial_state(g, 3, 1, 1.0, 0.0)
    grid = probability_grid(state).to_dense()
    assert grid[1, 3] == 1.0
    assert grid.sum() == 1.0


def test_probability_sums_to_one_after_evolution():
    g = build_geometry("quarter_stadium", 20, 10)
    op = build_step_operator(g, SYM)
    state = centered_initial_state(g, 5, 5, SPIN_UP, SPIN_DOWN)
    snapshots, final = evolve(state, op, steps=100, snapshot_times=[100])
    assert abs(snapshots[0][1].total() - 1.0) < 1e-10
    assert abs(final.norm() - 1.0) < 1e-10


def test_support_growth_bound():
    # one horizontal plus one vertical move per step: Chebyshev radius t
    g = build_geometry("rectangle", 20, 10)
    op = build_step_operator(g, SYM)
    state = centered_initial_state(g, 10, 5, SPIN_UP, SPIN_DOWN)
    amps = state.amplitudes
    for t in range(1, 6):
        amps = op.apply(amps)
        dense = probability_grid(WalkerState(geometry=g, amplitudes=amps)).to_dense()
        outside = dense.copy()
        outside[max(5 - t, 0) : 5 + t + 1, max(10 - t, 0) : 10 + t + 1] = 0.0
        assert outside.max() == 0.0


def test_norm_drift_over_232_steps():
    g = build_geometry("quarter_stadium", 50, 25)
    op = build_step_operator(g, SYM)
    state = centered_initial_state(g, 12, 12, SPIN_UP, SPIN_DOWN)
    _, final = evolve(state, op, steps=232)
    assert abs(final.norm() - 1.0) < 1e-10


def _differing_sites(rect, stadium):
    """Sites where the stadium shifts act differently from the rectangle's."""
    sites = set()
    for m in range(stadium.m_R + 1):
        top = stadium.f[m]
        if 0 <= top < stadium.n_U:
            sites.add((m, top))
        if stadium.f_lo[m] > 0:
            sites.add((m, stadium.f_lo[m]))
    for n in range(stadium.n_U + 1):
        right = stadium.w[n]
        if 0 <= right < stadium.m_R:
            sites.add((right, n))
        if stadium.w_lo[n] > 0:
            sites.add((stadium.w_lo[n], n))
    return sites


@pytest.mark.parametrize("start", [(30, 15), (10, 8)])
def test_rectangle_stadium_agreement_before_wall_contact(start):
    """Identical grids until the support can reach a differing wall site."""
    m0, n0 = start
    rect = build_geometry("rectangle", 60, 30)
    stad = build_geometry("quarter_stadium", 60, 30)
    t_zero = min(
        max(abs(m - m0), abs(n - n0)) for m, n in _differing_sites(rect, stad)
    )
    op_r = build_step_operator(rect, SYM)
    op_s = build_step_operator(stad, SYM)
    amps_r = centered_initial_state(rect, m0, n0, SPIN_UP, SPIN_DOWN).amplitudes
    amps_s = centered_initial_state(stad, m0, n0, SPIN_UP, SPIN_DOWN).amplitudes
    for t in range(1, t_zero):
        amps_r = op_r.apply(amps_r)
        amps_s = op_s.apply(amps_s)
        dense_r = probability_grid(WalkerState(geometry=rect, amplitudes=amps_r)).to_dense()
        dense_s = probability_grid(WalkerState(geometry=stad, amplitudes=amps_s)).to_dense()
        assert np.abs(dense_r - dense_s).max() < 1e-14, f"diverged at t={t} < {t_zero}"
    # after several wall interactions the distributions differ measurably
    for _ in range(t_zero, 3 * t_zero):
        amps_r = op_r.apply(amps_r)
        amps_s = op_s.apply(amps_s)
    dense_r = probability_grid(WalkerState(geometry=rect, amplitudes=amps_r)).to_dense()
    dense_s = probability_grid(WalkerState(geometry=stad, amplitudes=amps_s)).to_dense()
    assert np.abs(dense_r - dense_s).sum() > 0.01


def test_evolve_argument_validation():
    g = build_geometry("rectangle", 6, 3)
    op = build_step_operator(g, SYM)
    state = centered_initial_state(g, 3, 1, SPIN_UP, SPIN_DOWN)
    with pytest.raises(ValueError):
        evolve(state, op, steps=5, snapshot_times=[3, 1])
    with pytest.raises(ValueError):
        evolve(state, op, steps=5, snapshot_times=[6])
    other = build_geometry("rectangle", 8, 4)
    with pytest.raises(ValueError):
        evolve(
            centered_initial_state(other, 1, 1, SPIN_UP, SPIN_DOWN), op, steps=2
        )


def test_snapshot_csv_export(tmp_path):
    g = build_geometry("quarter_stadium", 10, 5)
    op = build_step_operator(g, SYM)
    state = centered_initial_state(g, 3, 2, SPIN_UP, SPIN_DOWN)
    snapshots, _ = evolve(state, op, steps=10, snapshot_times=[10])
    path = tmp_path / "snapshot.csv"
    snapshots[0][1].write_csv(path, config_hash="deadbeef")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config=deadbeef"
    assert lines[1] == "m,n,p"
    total = sum(float(line.split(",")[2]) for line in lines[2:])
    assert abs(total - 1.0) < 1e-10
