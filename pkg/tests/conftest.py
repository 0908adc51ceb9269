import numpy as np
import pytest

from degenid import StateData, SpaceTimeField, build_grid, make_power_envelopes


def random_instance(rng, n_cells=50, n_steps=50, eps=0.1, bc="dirichlet", nonzero_f=True):
    """Random feasible coefficient, smooth data and an admissible direction."""
    from degenid.coefficients import project_onto_admissible

    x0 = rng.uniform(0.3, 0.7)
    g = build_grid(1.0, 1.0, x0, n_cells, n_steps)
    spec = make_power_envelopes(2.0, 0.5, rng.choice([1.0, 2.0]), g, u_inf=3.0, epsilon=eps)
    raw = spec.lo + rng.uniform(0, 1, g.n_nodes) * (spec.hi - spec.lo)
    u = project_onto_admissible(raw, spec)
    x = g.x
    k = rng.integers(1, 4)
    if bc == "dirichlet":
        y0 = np.sin(k * np.pi * x) + rng.uniform(0, 1) * x * (1 - x)
        y0[[0, -1]] = 0.0
    else:
        y0 = np.sin((k - 0.5) * np.pi * x) + rng.uniform(0, 1) * x
    f = None
    if nonzero_f:
        c = rng.normal(size=3)
        f = SpaceTimeField(
            np.outer(1 + c[0] * g.t, c[1] * x * (1 - x) + c[2] * np.sin(np.pi * x)), g
        )
    data = StateData(g, y0, f, bc)
    v = rng.normal(size=g.n_nodes) * np.sin(np.pi * x) * 0.2
    v[[0, -1]] = 0.0
    return g, spec, u, data, v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
