"""State and variation solvers for the degenerate diffusion equation.

Space: P1 elements with face coefficients ``(u[i] + u[i+1]) / 2`` and a
lumped mass matrix. Time: backward Euler. Dirichlet nodes are removed from
the unknowns; a Neumann end keeps its natural (flux-free) row.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .coefficients import CoefficientProfile, coefficient_values
from .grid import Grid, SpaceTimeField, check_spatial

CoefficientLike = Union[CoefficientProfile, np.ndarray]


class BoundaryCondition(str, enum.Enum):
    DIRICHLET = "dirichlet"
    DIRICHLET_NEUMANN = "dirichlet_neumann"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        aliases = {"dd": cls.DIRICHLET, "dn": cls.DIRICHLET_NEUMANN}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}") from None


def free_nodes(grid: Grid, bc: BoundaryCondition) -> slice:
    """Slice of nodes carrying unknowns."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.DIRICHLET:
        return slice(1, grid.n_cells)
    return slice(1, grid.n_cells + 1)


@dataclass(frozen=True, eq=False)
class Tridiagonal:
    """Symmetric tridiagonal operator acting on the free nodes ``free``.

    ``lower[i]`` is ``A[i+1, i]`` and ``upper[i]`` is ``A[i, i+1]`` in the
    local (free-node) numbering.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    free: slice = field(default=slice(None))

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.diag * x
        out[:-1] += self.upper * x[1:]
        out[1:] += self.lower * x[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.upper, 1)
            + np.diag(self.lower, -1)
        )

    def shifted(self, mass_dt: np.ndarray) -> "Tridiagonal":
        """``diag(mass_dt) + self``."""
        return Tridiagonal(self.lower, self.diag + mass_dt, self.upper, self.free)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return _kernels.thomas_solve(self.lower, self.diag, self.upper, np.asarray(rhs, float))


def face_coefficients(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u[:-1] + u[1:])


def _grid_of(u, grid: Optional[Grid]) -> Grid:
    if grid is not None:
        return grid
    if isinstance(u, CoefficientProfile):
        return u.grid
    raise ValueError("a Grid is required when u is a plain array")


def assemble_stiffness(
    u: CoefficientLike, bc=BoundaryCondition.DIRICHLET, grid: Optional[Grid] = None
) -> Tridiagonal:
    """Stiffness of ``int u z_x psi_x`` restricted to the free nodes."""
    g = _grid_of(u, grid)
    bc = BoundaryCondition.parse(bc)
    a = face_coefficients(check_spatial(coefficient_values(u), g, "u")) / g.dx
    n = g.n_nodes
    diag = np.zeros(n)
    diag[:-1] += a
    diag[1:] += a
    off = -a
    sl = free_nodes(g, bc)
    idx = np.arange(n)[sl]
    return Tridiagonal(
        off[idx[:-1]].copy(), diag[idx].copy(), off[idx[:-1]].copy(), sl
    )


def stiffness_apply(u, y, grid: Grid) -> np.ndarray:
    """Unrestricted ``K(u) y`` on all nodes, batched over leading axes of ``y``."""
    a = face_coefficients(check_spatial(coefficient_values(u), grid, "u"))
    flux = a * np.diff(y, axis=-1) / grid.dx
    out = np.zeros(np.shape(y))
    out[..., :-1] -= flux
    out[..., 1:] += flux
    return out


def flux_density(u, grid: Grid) -> np.ndarray:
    """Nodal density ``g / m`` of the flux functional ``sum_i a_{i+1/2}(y_{i+1} - y_i)``.

    ``g_j = a_{j-1/2} - a_{j+1/2}`` with zero outer faces, and ``m`` the
    lumped mass. In the interior this is ``-u_x`` to second order; at the end
    nodes it carries the boundary flux term.
    """
    a = face_coefficients(check_spatial(coefficient_values(u), grid, "u"))
    g = np.zeros(grid.n_nodes)
    g[1:] += a
    g[:-1] -= a
    return g / grid.space_weights()


def march(
    grid: Grid,
    u,
    bc: BoundaryCondition,
    start: np.ndarray,
    loads: np.ndarray,
) -> np.ndarray:
    """Backward Euler ``(M/dt + K) z[k+1] = (M/dt) z[k] + loads[k+1]``.

    ``start`` and ``loads`` are nodal, shape ``(n_nodes,)`` and
    ``(n_levels, n_nodes)``; values at Dirichlet nodes are ignored and the
    result is zero there.
    """
    K = assemble_stiffness(u, bc, grid)
    sl = K.free
    mass_dt = grid.space_weights()[sl] / grid.dt
    A = K.shifted(mass_dt)
    loads = np.ascontiguousarray(loads[:, sl], dtype=float)
    res = _kernels.implicit_march(
        A.lower, A.diag, A.upper, mass_dt, loads, np.ascontiguousarray(start[sl], float)
    )
    if not np.all(np.isfinite(res)):
        raise FloatingPointError("tridiagonal solve produced non-finite values")
    out = np.zeros((loads.shape[0], grid.n_nodes))
    out[:, sl] = res
    return out


def _source_field(f, grid: Grid) -> np.ndarray:
    shape = (grid.n_steps + 1, grid.n_nodes)
    if f is None:
        return np.zeros(shape)
    vals = f.values if isinstance(f, SpaceTimeField) else np.asarray(f, dtype=float)
    if vals.shape != shape:
        raise ValueError(f"source has shape {vals.shape}, expected {shape}")
    return vals


@dataclass(frozen=True, eq=False)
class ForwardProblem:
    u: CoefficientLike
    y0: np.ndarray
    f: Optional[SpaceTimeField] = None
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    grid: Optional[Grid] = None

    def __post_init__(self):
        g = _grid_of(self.u, self.grid)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        object.__setattr__(self, "y0", check_spatial(self.y0, g, "y0"))
        if isinstance(self.u, CoefficientProfile) and self.u.grid != g:
            raise ValueError("coefficient and problem grids differ")
        if isinstance(self.f, SpaceTimeField) and self.f.grid != g:
            raise ValueError("source and problem grids differ")


@dataclass(frozen=True, eq=False)
class StateData:
    """Coefficient-independent data of the state equation."""

    grid: Grid
    y0: np.ndarray
    f: Optional[SpaceTimeField] = None
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        object.__setattr__(self, "y0", check_spatial(self.y0, self.grid, "y0"))

    def problem(self, u: CoefficientLike) -> ForwardProblem:
        return ForwardProblem(u, self.y0, self.f, self.bc, self.grid)


def solve_forward(problem: ForwardProblem) -> SpaceTimeField:
    """Backward Euler trajectory with ``y[0] = y0`` and homogeneous Dirichlet data."""
    g = problem.grid
    y0 = problem.y0.copy()
    dirichlet = [0] if problem.bc is BoundaryCondition.DIRICHLET_NEUMANN else [0, -1]
    scale = 1e-12 * max(1.0, float(np.max(np.abs(y0))))
    if any(abs(y0[i]) > scale for i in dirichlet):
        warnings.warn("y0 does not vanish at Dirichlet nodes; overwriting with 0", UserWarning, stacklevel=2)
    y0[dirichlet] = 0.0
    loads = _source_field(problem.f, g) * g.space_weights()
    values = march(g, problem.u, problem.bc, y0, loads)
    values[0] = y0
    return SpaceTimeField(values, g)


def check_direction(v, u_star: CoefficientLike, grid: Grid, atol: float = 0.0) -> np.ndarray:
    """Validate a variation direction; ``v(x0) = 0`` is needed only without regularization."""
    v = check_spatial(v, grid, "v")
    if abs(v[0]) > atol or abs(v[-1]) > atol:
        raise ValueError("direction must vanish at both endpoints")
    eps = u_star.spec.epsilon if isinstance(u_star, CoefficientProfile) else None
    if eps == 0.0 and abs(v[grid.x0_index]) > atol:
        raise ValueError("direction must vanish at the degeneracy point")
    return v


def solve_variation(
    u_star: CoefficientLike,
    y_star: SpaceTimeField,
    v,
    bc=BoundaryCondition.DIRICHLET,
) -> SpaceTimeField:
    """Linearized state ``Y`` in direction ``v`` with ``Y(0) = 0``.

    Each step solves ``(M/dt + K(u*)) Y[k+1] = (M/dt) Y[k] - K(v) y*[k+1]``.
    """
    g = y_star.grid
    bc = BoundaryCondition.parse(bc)
    v = check_direction(v, u_star, g)
    loads = -stiffness_apply(v, y_star.values, g)
    values = march(g, u_star, bc, np.zeros(g.n_nodes), loads)
    values[0] = 0.0
    return SpaceTimeField(values, g)
