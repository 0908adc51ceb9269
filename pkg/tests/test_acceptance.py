"""Exit criteria, one test each, at the stated tolerances and runtime budgets."""

import time
import warnings

import numpy as np
import pytest

from degenid import (
    FinalTimeCost,
    ForwardProblem,
    SpaceTimeField,
    StateData,
    build_grid,
    closed_form_optimizer,
    eval_cost,
    make_power_envelopes,
    solve_adjoint,
    solve_forward,
    solve_variation,
    verify_eikonal_structure,
)
from degenid.cost import adjoint_problem_for, directional_derivative, evaluate
from degenid.experiments import PRESETS, run_preset
from degenid.identify import IdentifyConfig, continue_in_epsilon

from conftest import random_instance
from helpers import adjoint_identity_sides, pairing_rhs, random_cost
from mms import energy_ratio, observed_orders, space_error, time_error

pytestmark = pytest.mark.acceptance

SCHEDULE = (0.4, 0.2, 0.1, 0.05)


def steep_quadratic_spec(n_cells):
    g = build_grid(1.0, 2.0, 0.7, n_cells, n_cells)
    return make_power_envelopes(20, 1, 2, g, u_inf=10.0, u0=3.0, uL=1.0)


def _final_time_identification(n_cells=200):
    spec = steep_quadratic_spec(n_cells)
    data = StateData(spec.grid, spec.grid.x, None, "dirichlet_neumann")
    t0 = time.perf_counter()
    res = continue_in_epsilon(spec, data, FinalTimeCost(), IdentifyConfig(epsilon_schedule=SCHEDULE))
    return spec, res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def final_time_run():
    return _final_time_identification()


def test_criterion_1_closed_form_roots():
    t0 = time.perf_counter()
    spec = steep_quadratic_spec(200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = closed_form_optimizer(spec)
    elapsed = time.perf_counter() - t0
    assert abs(sol.x1 - 0.2) < 1e-10
    assert abs(sol.x2 - (18 + np.sqrt(420)) / 40) < 1e-10
    x, u = spec.grid.x, sol.profile.values
    left, right = x < sol.x1, x >= sol.x2
    mid = ~left & ~right
    np.testing.assert_allclose(u[left], 3 + 10 * x[left], rtol=1e-14)
    np.testing.assert_allclose(u[mid], spec.upper[mid], rtol=1e-14)
    np.testing.assert_allclose(u[right], 1 - 10 * (x[right] - 1), rtol=1e-14, atol=1e-14)
    assert elapsed < 1.0


def test_criterion_2_final_mass_ordering_in_exponent(tmp_path):
    t0 = time.perf_counter()
    for cells in (400, 800):
        I = {}
        for n in (1, 2, 3):
            s = run_preset(f"sec4_n{n}", tmp_path / f"{cells}_{n}", cells=cells, steps=cells)
            I[n] = s["I"]
        assert I[3] < I[2] < I[1], (cells, I)
    assert time.perf_counter() - t0 < 60


def test_criterion_3_superlevel_set_grows_with_exponent(tmp_path):
    t0 = time.perf_counter()
    s = run_preset("fig12_qualitative", tmp_path)
    m = s["measure_above_level"]
    assert m["n4"] > m["n2"]
    assert time.perf_counter() - t0 < 10


def test_criterion_4_adjoint_identity():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(20):
        bc = ("dirichlet", "dirichlet_neumann")[i % 2]
        g, spec, u, data, v = random_instance(rng, 50, 50, eps=0.1, bc=bc)
        cost = random_cost(rng) if i % 4 < 2 else FinalTimeCost()
        y = solve_forward(data.problem(u))
        _, res = eval_cost(u, y, cost)
        ap = adjoint_problem_for(u, res, cost, bc)
        p = solve_adjoint(ap)
        Y = solve_variation(u, y, v, bc)
        lhs = adjoint_identity_sides(u, y, Y, p, ap.source, res, cost)
        rhs = pairing_rhs(v, y, p)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    assert worst < 1e-8


def test_criterion_5_gradient_vs_central_differences():
    rng = np.random.default_rng(99)
    lam = 1e-4
    worst = 0.0
    for bc in ("dirichlet", "dirichlet_neumann"):
        for final_time in (False, True):
            for _ in range(10):
                g, spec, u, data, v = random_instance(rng, 50, 50, eps=0.1, bc=bc)
                cost = FinalTimeCost() if final_time else random_cost(rng)
                d = directional_derivative(evaluate(u, data, cost).phi, v, g)
                Jp = evaluate(u.with_values(u.values + lam * v), data, cost, False).J
                Jm = evaluate(u.with_values(u.values - lam * v), data, cost, False).J
                fd = (Jp - Jm) / (2 * lam)
                worst = max(worst, abs(d - fd) / abs(fd))
    assert worst < 1e-3


def test_criterion_6_forward_solver_verification():
    t_orders = observed_orders([time_error(n) for n in (10, 20, 40)])
    s_orders = observed_orders([space_error(n, True) for n in (320, 640, 1280)])
    assert np.all(t_orders >= 0.9), t_orders
    assert np.all(s_orders >= 1.9), s_orders

    rng = np.random.default_rng(5)
    worst = np.inf
    for i in range(50):
        bc = ("dirichlet", "dirichlet_neumann")[i % 2]
        g, spec, u, data, _ = random_instance(rng, 40, 30, eps=0.1, bc=bc)
        y0 = np.abs(data.y0)
        f = np.abs(rng.normal(size=(g.n_steps + 1, g.n_nodes)))
        coeff = spec.upper if i % 3 == 0 else u.values
        y = solve_forward(ForwardProblem(coeff, y0, SpaceTimeField(f, g), bc, g))
        worst = min(worst, float(np.min(y.values)) / np.max(y0))
    assert worst >= -1e-12

    T = 1.0
    C = 2 * (1 + T) * np.exp(2 * T)
    ratios = []
    for eps in (0.0, 0.05, 0.2):
        for n in (25, 50, 100):
            for m in (10, 20, 40):
                g = build_grid(1.0, T, 0.5, n, m)
                spec = make_power_envelopes(2, 1, 2, g, u_inf=5, epsilon=eps)
                u = spec.lower + eps
                y0 = np.sin(np.pi * g.x)
                y0[[0, -1]] = 0
                f = np.outer(np.cos(3 * g.t), g.x * (1 - g.x)) * 5
                y = solve_forward(ForwardProblem(u, y0, SpaceTimeField(f, g), "dirichlet", g))
                ratios.append(energy_ratio(u, y0, f, g, y))
    assert max(ratios) <= C


def test_criterion_7_continuation_matches_closed_form(final_time_run):
    spec, res, elapsed = final_time_run
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cf = closed_form_optimizer(spec)
    gap = float(np.max(np.abs(res.u_star.values - cf.profile.values)))
    budget = 5 * SCHEDULE[-1] + 2 * spec.u_inf * spec.grid.dx
    assert elapsed < 300
    assert gap <= budget, f"max-norm gap {gap:.4f} exceeds {budget:.4f}"


def test_criterion_8_eikonal_structure(final_time_run):
    spec, res, _ = final_time_run
    rep = verify_eikonal_structure(res.u_star, tol=0.05 * spec.u_inf)
    assert rep.n_below > 0
    assert rep.compliant_fraction >= 0.95


def test_criterion_9_preset_determinism(tmp_path):
    for name in sorted(PRESETS):
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        run_preset(name, a)
        run_preset(name, b)
        files = sorted(p.name for p in a.iterdir())
        assert files == sorted(p.name for p in b.iterdir())
        for f in files:
            assert (a / f).read_bytes() == (b / f).read_bytes(), (name, f)
