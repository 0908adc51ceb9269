"""Oracles that recompute discrete quantities independently of the library."""

import numpy as np

from degenid.cost import adjoint_problem_for, eval_cost
from degenid.forward import stiffness_apply


def adjoint_identity_sides(u, y, Y, p, source, res, cost):
    """Both sides of the pairing between the variation and adjoint solutions.

    Left: ``sum_{k>=1} dt (M S, Y^k) + lambda2 I_T (1, M Y^N)``.
    Right: ``sum_{k>=1} dt (p^{k-1}, K(v) y^k)`` with ``v`` folded into ``Kv``.
    """
    g = y.grid
    m = g.space_weights()
    lam2 = getattr(cost, "lambda2", None)
    terminal_weight = 1.0 if lam2 is None else lam2 * res.I_T
    lhs = g.dt * np.sum((Y.values[1:] * source) @ m) + terminal_weight * (m @ Y.final)
    return lhs


def pairing_rhs(v, y, p):
    g = y.grid
    Kv = stiffness_apply(v, y.values, g)
    return g.dt * np.sum(p.values[:-1] * Kv[1:])


def brute_force_cost(u, y, g, cost):
    """Cost by explicit loops over levels, faces and nodes."""
    dt, dx = g.dt, g.dx
    n = g.n_cells
    flux = 0.0
    final = 0.0
    mean = 0.0
    for k in range(1, g.n_steps + 1):
        for i in range(n):
            a = 0.5 * (u[i] + u[i + 1])
            flux += dt * dx * a * (y[k, i + 1] - y[k, i]) / dx
            mean += dt * dx * 0.5 * (y[k, i] + y[k, i + 1])
    for i in range(n):
        final += dx * 0.5 * (y[-1, i] + y[-1, i + 1])
    if not hasattr(cost, "lambda1"):
        return final
    r = (flux - cost.M_f, final - cost.M_T, mean - cost.M)
    return 0.5 * (cost.lambda1 * r[0] ** 2 + cost.lambda2 * r[1] ** 2 + cost.lambda3 * r[2] ** 2)


def random_cost(rng):
    from degenid import CostSpec

    lam = rng.uniform(0.2, 2.0, 3)
    return CostSpec(*lam, *rng.normal(size=3) * 0.1)
