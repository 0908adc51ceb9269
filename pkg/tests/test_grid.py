import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenid import Grid, SpaceTimeField, build_grid, integrate_space, integrate_spacetime


def test_build_grid_midpoint():
    g = build_grid(1, 2, 0.5, 10, 20)
    assert g.x0_index == 5
    assert g.dx == pytest.approx(0.1, abs=0)
    assert g.dt == 0.1
    assert g.snap_displacement == 0.0


def test_build_grid_large_domain():
    g = build_grid(10, 0.5, 5, 400, 200)
    assert g.x0_index == 200
    assert g.x[g.x0_index] == 5.0


def test_build_grid_snap_report():
    g = build_grid(1, 1, 0.333, 10, 10)
    assert g.x0_index == 3
    # nearest node 0.3, so the reported displacement is 0.033
    assert g.snap_displacement == pytest.approx(0.033, abs=1e-12)


@pytest.mark.parametrize(
    "args",
    [(1, 1, 0.0, 10, 10), (1, 1, 1.0, 10, 10), (1, 1, -0.2, 10, 10), (1, 1, 0.04, 10, 10),
     (1, 1, 0.97, 10, 10), (1, 1, 0.5, 3, 10), (1, 1, 0.5, 10, 0)],
)
def test_build_grid_errors(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_grid_invariants():
    with pytest.raises(ValueError):
        Grid(1.0, 1.0, 10, 10, 0)
    with pytest.raises(ValueError):
        Grid(1.0, 1.0, 10, 10, 10)


@settings(max_examples=200, deadline=None)
@given(
    L=st.floats(0.1, 100),
    frac=st.floats(0.01, 0.99),
    n=st.integers(4, 500),
)
def test_snap_distance_at_most_half_cell(L, frac, n):
    x0 = frac * L
    try:
        g = build_grid(L, 1.0, x0, n, 1)
    except ValueError:
        dx = L / n
        assert x0 < 0.5 * dx + 1e-12 * L or x0 > L - 0.5 * dx - 1e-12 * L
        return
    assert abs(g.x[g.x0_index] - x0) <= 0.5 * g.dx * (1 + 1e-12)
    assert 0 < g.x0_index < g.n_cells


def test_integrate_space_examples():
    for n in (4, 7, 100):
        g = build_grid(1, 1, 0.5, n, 1)
        assert integrate_space(np.ones(g.n_nodes), g) == pytest.approx(1.0, rel=1e-14)
    g = build_grid(1, 1, 0.5, 4, 1)
    assert integrate_space(g.x, g) == pytest.approx(0.5, rel=1e-14)
    g = build_grid(1, 1, 0.5, 100, 1)
    assert abs(integrate_space(np.sin(np.pi * g.x), g) - 2 / np.pi) < 1e-4


def test_integrate_space_length_mismatch():
    g = build_grid(1, 1, 0.5, 4, 1)
    with pytest.raises(ValueError):
        integrate_space(np.ones(4), g)


def test_integrate_spacetime_examples():
    g = build_grid(2, 1, 1, 8, 5)
    f = SpaceTimeField(np.ones((6, 9)), g)
    assert integrate_spacetime(f) == pytest.approx(2.0, rel=1e-14)
    g = build_grid(1, 1, 0.5, 10, 10)
    f = SpaceTimeField(np.outer(g.t, g.x), g)
    assert integrate_spacetime(f) == pytest.approx(0.25, rel=1e-13)
    g = build_grid(1, 1, 0.5, 100, 100)
    f = SpaceTimeField(np.outer(np.exp(-g.t), np.sin(np.pi * g.x)), g)
    assert abs(integrate_spacetime(f) - (1 - np.exp(-1)) * 2 / np.pi) < 1e-4


@settings(max_examples=50, deadline=None)
@given(
    c=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    n=st.integers(4, 40),
    m=st.integers(1, 40),
)
def test_trapezoid_exact_for_bilinear(c, n, m):
    g = build_grid(1.5, 2.5, 0.75, n, m)
    vals = c[0] + c[1] * g.t[:, None] + c[2] * g.x[None, :] + c[3] * np.outer(g.t, g.x)
    exact = 1.5 * 2.5 * (c[0] + c[1] * 1.25 + c[2] * 0.75 + c[3] * 1.25 * 0.75)
    got = integrate_spacetime(SpaceTimeField(vals, g))
    assert got == pytest.approx(exact, rel=1e-13, abs=1e-12)


def test_backward_time_rule():
    g = build_grid(1, 1, 0.5, 4, 4)
    w = g.time_weights("backward")
    assert w[0] == 0 and np.allclose(w[1:], 0.25)
    with pytest.raises(ValueError):
        g.time_weights("simpson")


def test_field_shape_checked():
    g = build_grid(1, 1, 0.5, 4, 4)
    with pytest.raises(ValueError):
        SpaceTimeField(np.zeros((4, 5)), g)


def test_refined_keeps_x0():
    g = build_grid(1, 1, 0.3, 10, 5).refined()
    assert g.n_cells == 20 and g.n_steps == 10 and g.x[g.x0_index] == pytest.approx(0.3)
