"""Backward-in-time dual system ``p_t + (u p_x)_x = S``, ``p(T) = terminal``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .coefficients import CoefficientProfile
from .forward import BoundaryCondition, free_nodes, march
from .grid import Grid, SpaceTimeField, check_spatial

Spatial = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class AdjointProblem:
    """Dual problem data.

    ``terminal`` and ``source`` may be scalars or nodal vectors. The source
    is the right-hand side ``S`` of ``p_t + (u p_x)_x = S``; it is held
    fixed in time.
    """

    u_star: CoefficientProfile
    terminal: Spatial
    source: Spatial = 0.0
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    grid: Grid = None

    def __post_init__(self):
        g = self.grid if self.grid is not None else self.u_star.grid
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        object.__setattr__(self, "terminal", _nodal(self.terminal, g, "terminal"))
        object.__setattr__(self, "source", _nodal(self.source, g, "source"))

    @property
    def rhs_const(self) -> float:
        """The source value when it is spatially constant; raises otherwise."""
        s = self.source
        if not np.all(s == s[0]):
            raise ValueError("adjoint source is not constant in x")
        return float(s[0])


def _nodal(value, grid: Grid, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_nodes, float(arr))
    return check_spatial(arr, grid, name).copy()


def solve_adjoint(problem: AdjointProblem) -> SpaceTimeField:
    """March ``p`` from ``T`` down to 0 in the reversed time ``T - t``.

    Level ``j`` solves ``(M/dt + K) p[j] = (M/dt) p[j+1] - M S``. Dirichlet
    nodes are zero, including in the stored terminal level.
    """
    g = problem.grid
    start = np.zeros(g.n_nodes)
    sl = free_nodes(g, problem.bc)
    start[sl] = problem.terminal[sl]
    load = -g.space_weights() * problem.source
    loads = np.broadcast_to(load, (g.n_steps + 1, g.n_nodes))
    reversed_values = march(g, problem.u_star, problem.bc, start, loads)
    return SpaceTimeField(reversed_values[::-1].copy(), g)
