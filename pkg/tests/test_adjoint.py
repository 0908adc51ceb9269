import numpy as np
import pytest

from degenid import (
    AdjointProblem,
    CostSpec,
    FinalTimeCost,
    SpaceTimeField,
    StateData,
    build_grid,
    eval_cost,
    make_power_envelopes,
    project_onto_admissible,
    solve_adjoint,
    solve_forward,
    solve_variation,
)
from degenid.cost import adjoint_problem_for

from conftest import random_instance
from helpers import adjoint_identity_sides, pairing_rhs, random_cost


def test_zero_data_adjoint_is_zero(rng):
    g, spec, u, data, v = random_instance(rng)
    p = solve_adjoint(AdjointProblem(u, 0.0, 0.0, "dirichlet"))
    assert np.array_equal(p.values, np.zeros_like(p.values))


def test_terminal_level_and_boundary_rows(rng):
    g, spec, u, data, v = random_instance(rng, bc="dirichlet_neumann")
    p = solve_adjoint(AdjointProblem(u, -2.0, 0.3, "dirichlet_neumann"))
    assert p.values[-1, 0] == 0.0 and np.all(p.values[-1, 1:] == -2.0)
    assert np.all(p.values[:, 0] == 0.0)
    q = solve_adjoint(AdjointProblem(u, -2.0, 0.3, "dirichlet"))
    assert np.all(q.values[:, [0, -1]] == 0.0)


def test_rhs_const_accessor(rng):
    g, spec, u, data, v = random_instance(rng)
    assert AdjointProblem(u, -1.0, 0.25).rhs_const == 0.25
    with pytest.raises(ValueError):
        AdjointProblem(u, -1.0, g.x).rhs_const


@pytest.mark.parametrize("bc", ["dirichlet", "dirichlet_neumann"])
@pytest.mark.parametrize("final_time", [False, True])
def test_adjoint_identity(bc, final_time, rng):
    for _ in range(5):
        g, spec, u, data, v = random_instance(rng, bc=bc)
        cost = FinalTimeCost() if final_time else random_cost(rng)
        y = solve_forward(data.problem(u))
        _, res = eval_cost(u, y, cost)
        ap = adjoint_problem_for(u, res, cost, bc)
        p = solve_adjoint(ap)
        Y = solve_variation(u, y, v, bc)
        lhs = adjoint_identity_sides(u, y, Y, p, ap.source, res, cost)
        rhs = pairing_rhs(v, y, p)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_final_time_adjoint_signs():
    """Increasing data: y_x > 0 and p_x < 0 for t < T, p <= 0."""
    for eps in (0.05, 0.1, 0.4):
        g = build_grid(1.0, 1.0, 0.5, 80, 80)
        spec = make_power_envelopes(2, 0.5, 1, g, u_inf=2.5, epsilon=eps)
        for theta in (0.0, 0.5, 1.0):
            u = project_onto_admissible(spec.lo + theta * (spec.hi - spec.lo), spec)
            f = SpaceTimeField(np.outer(1 + g.t, g.x), g)
            data = StateData(g, 2 * g.x - 0.5 * g.x**2, f, "dirichlet_neumann")
            y = solve_forward(data.problem(u))
            p = solve_adjoint(AdjointProblem(u, -1.0, 0.0, "dirichlet_neumann"))
            assert np.max(p.values) <= 1e-12
            assert np.max(p.x_derivative()[:-1]) < 0
            assert np.min(y.x_derivative()) > 0
