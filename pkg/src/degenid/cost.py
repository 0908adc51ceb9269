"""Cost functionals, residuals, adjoint-based gradient and KKT diagnostics.

Space-time integrals in the cost use the right-endpoint rule in time
(levels ``1..n_steps``), which pairs with backward Euler and makes the
adjoint gradient the exact derivative of the discrete cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .adjoint import AdjointProblem, solve_adjoint
from .coefficients import CoefficientProfile, coefficient_values
from .forward import (
    BoundaryCondition,
    StateData,
    face_coefficients,
    flux_density,
    solve_forward,
)
from .grid import Grid, SpaceTimeField, check_spatial, integrate_space, integrate_spacetime

TIME_RULE = "backward"


@dataclass(frozen=True)
class CostSpec:
    """Weighted least-squares cost on flux, final-time mean and space-time mean."""

    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    M_f: float = 0.0
    M_T: float = 0.0
    M: float = 0.0

    def __post_init__(self):
        lams = (self.lambda1, self.lambda2, self.lambda3)
        if any(l < 0 for l in lams):
            raise ValueError(f"weights must be nonnegative, got {lams}")
        if not any(l > 0 for l in lams):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class FinalTimeCost:
    """Linear cost ``J(u) = int_0^L y(T, x) dx``."""


Cost = Union[CostSpec, FinalTimeCost]


@dataclass(frozen=True)
class Residuals:
    I_f: float
    I_T: float
    I_M: float


def _check_grids(u, y: SpaceTimeField):
    if isinstance(u, CoefficientProfile) and u.grid != y.grid:
        raise ValueError("coefficient and trajectory grids differ")


def eval_flux_integral(u, y: SpaceTimeField, rule: str = TIME_RULE) -> float:
    """``sum_k w_k sum_i u_{i+1/2} (y[k, i+1] - y[k, i])``."""
    _check_grids(u, y)
    g = y.grid
    a = face_coefficients(check_spatial(coefficient_values(u), g, "u"))
    per_level = np.diff(y.values, axis=1) @ a
    return float(g.time_weights(rule) @ per_level)


def eval_cost(u, y: SpaceTimeField, cost: Cost) -> tuple[float, Residuals]:
    _check_grids(u, y)
    g = y.grid
    final = integrate_space(y.final, g)
    if isinstance(cost, FinalTimeCost):
        return final, Residuals(0.0, final, 0.0)
    res = Residuals(
        eval_flux_integral(u, y) - cost.M_f,
        final - cost.M_T,
        integrate_spacetime(y, TIME_RULE) - cost.M,
    )
    J = 0.5 * (
        cost.lambda1 * res.I_f**2 + cost.lambda2 * res.I_T**2 + cost.lambda3 * res.I_M**2
    )
    return float(J), res


def adjoint_problem_for(
    u: CoefficientProfile, res: Residuals, cost: Cost, bc
) -> AdjointProblem:
    """Dual problem whose solution turns variations into the gradient of ``cost``."""
    if isinstance(cost, FinalTimeCost):
        return AdjointProblem(u, -1.0, 0.0, bc)
    source = cost.lambda1 * res.I_f * flux_density(u, u.grid) + cost.lambda3 * res.I_M
    return AdjointProblem(u, -cost.lambda2 * res.I_T, source, bc)


def _flux_weight(res: Residuals, cost: Cost) -> float:
    if isinstance(cost, FinalTimeCost):
        return 0.0
    return cost.lambda1 * res.I_f


def eval_gradient_field(
    u,
    y: SpaceTimeField,
    p: SpaceTimeField,
    res: Residuals,
    cost: Cost,
) -> np.ndarray:
    """Nodal ``Phi`` with ``dJ(u)[v] = -int v Phi dx`` for the discrete cost.

    On faces ``Phi = -sum_{k>=1} dt y_x[k] (p_x[k-1] + lambda1 I_f)``; nodes
    take the mean of their adjacent faces (one face at the ends).
    """
    _check_grids(u, y)
    if y.grid != p.grid:
        raise ValueError("state and adjoint grids differ")
    g = y.grid
    yx = y.x_derivative()[1:]
    px = p.x_derivative()[:-1]
    face = -g.dt * np.sum(yx * (px + _flux_weight(res, cost)), axis=0)
    node = np.empty(g.n_nodes)
    node[1:-1] = 0.5 * (face[:-1] + face[1:])
    node[0] = face[0]
    node[-1] = face[-1]
    return node


@dataclass(frozen=True, eq=False)
class Evaluation:
    J: float
    residuals: Residuals
    y: SpaceTimeField
    phi: Optional[np.ndarray] = None
    p: Optional[SpaceTimeField] = None


def evaluate(
    u: CoefficientProfile, data: StateData, cost: Cost, gradient: bool = True
) -> Evaluation:
    """Forward solve, cost and (optionally) adjoint solve and gradient."""
    y = solve_forward(data.problem(u))
    J, res = eval_cost(u, y, cost)
    if not gradient:
        return Evaluation(J, res, y)
    p = solve_adjoint(adjoint_problem_for(u, res, cost, data.bc))
    phi = eval_gradient_field(u, y, p, res, cost)
    return Evaluation(J, res, y, phi, p)


def directional_derivative(phi: np.ndarray, v, grid: Grid) -> float:
    """First-order change of the cost along ``v``: ``-int v Phi``."""
    return -integrate_space(np.asarray(v, float) * phi, grid)


@dataclass(frozen=True, eq=False)
class KktDiagnostics:
    """Decomposition ``Phi = -rho' + mu`` with ``rho = nu u_x`` on eikonal nodes."""

    x: np.ndarray
    phi: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    active_lower: np.ndarray
    active_upper: np.ndarray
    eikonal_active: np.ndarray
    mu_violation: float
    rho_violation: float
    nu_violation: float
    phi_scale: float
    length: float

    @property
    def max_violation(self) -> float:
        return max(self.mu_violation, self.rho_violation, self.nu_violation)

    @property
    def relative_violation(self) -> float:
        if self.phi_scale == 0.0:
            return self.max_violation
        return max(
            self.mu_violation / self.phi_scale,
            self.nu_violation / self.phi_scale,
            self.rho_violation / (self.phi_scale * self.length),
        )

    def labels(self) -> np.ndarray:
        lab = np.full(self.x.size, "interior", dtype=object)
        lab[0] = lab[-1] = "endpoint"
        lab[self.eikonal_active] = "eikonal"
        lab[self.active_lower] = "lower"
        lab[self.active_upper] = "upper"
        return lab


def kkt_decompose(
    u: CoefficientProfile, phi, tol_active: float = 1e-6, slope_rtol: float = 1e-6
) -> KktDiagnostics:
    """Split ``phi`` into box multiplier ``mu`` and slope multiplier ``rho``.

    A node is box-active when it is within ``tol_active * (hi - lo)`` of a
    bound. A cell is eikonal when ``|u_x| >= u_inf (1 - slope_rtol)``.
    ``mu`` equals ``phi`` on box-active nodes and the pinned endpoints, zero
    elsewhere. ``rho`` integrates ``mu - phi`` from the left, with the free
    constant picked so ``rho`` has zero mean on non-eikonal nodes.
    """
    s = u.spec
    g = u.grid
    phi = check_spatial(phi, g, "phi")
    vals = u.values
    n = g.n_nodes
    interior = np.zeros(n, dtype=bool)
    interior[1:-1] = True
    band = tol_active * (s.hi - s.lo)
    lower = interior & (vals <= s.lo + band)
    upper = interior & (vals >= s.hi - band)
    box = lower | upper

    slopes = np.diff(vals) / g.dx
    eik_cell = np.abs(slopes) >= s.u_inf * (1.0 - slope_rtol) if s.u_inf > 0 else np.zeros(n - 1, bool)
    eik_adj = np.zeros(n, dtype=bool)
    eik_adj[:-1] |= eik_cell
    eik_adj[1:] |= eik_cell
    eik_adj &= interior
    non_eik = interior & ~eik_adj

    mu = np.where(box | ~interior, phi, 0.0)
    dr = mu - phi
    cum = np.concatenate(([0.0], np.cumsum(0.5 * g.dx * (dr[:-1] + dr[1:]))))
    if non_eik.any():
        C = -float(np.mean(cum[non_eik]))
    elif box.any():
        C = -float(np.mean(cum[box]))
    else:
        C = 0.0
    rho = cum + C

    # nodal slope from the adjacent eikonal cells
    left = np.zeros(n)
    right = np.zeros(n)
    nl = np.zeros(n)
    left[1:] = np.where(eik_cell, slopes, 0.0)
    right[:-1] = np.where(eik_cell, slopes, 0.0)
    nl[1:] += eik_cell
    nl[:-1] += eik_cell
    node_slope = np.divide(left + right, nl, out=np.zeros(n), where=nl > 0)
    nu = np.divide(rho, node_slope, out=np.zeros(n), where=eik_adj & (node_slope != 0))

    mu_viol = 0.0
    if lower.any():
        mu_viol = max(mu_viol, float(np.max(mu[lower])))
    if upper.any():
        mu_viol = max(mu_viol, float(np.max(-mu[upper])))
    mu_viol = max(mu_viol, 0.0)
    rho_viol = float(np.max(np.abs(rho[non_eik]))) if non_eik.any() else 0.0
    nu_viol = float(max(np.max(-nu[eik_adj]), 0.0)) if eik_adj.any() else 0.0

    idx = np.arange(n)
    return KktDiagnostics(
        x=g.x,
        phi=phi,
        rho=rho,
        mu=mu,
        nu=nu,
        active_lower=idx[lower],
        active_upper=idx[upper],
        eikonal_active=idx[eik_adj & ~box],
        mu_violation=mu_viol,
        rho_violation=rho_viol,
        nu_violation=nu_viol,
        phi_scale=float(np.max(np.abs(phi))),
        length=g.L,
    )
