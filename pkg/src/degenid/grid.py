"""Uniform space-time grid, trajectory container and trapezoid quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[0, L] x [0, T]`` with the degeneracy point on a node.

    Build instances with :func:`build_grid`; the constructor only checks the
    index invariants.
    """

    L: float
    T: float
    n_cells: int
    n_steps: int
    x0_index: int
    snap_displacement: float = 0.0

    def __post_init__(self):
        if self.n_cells < 4:
            raise ValueError(f"n_cells must be >= 4, got {self.n_cells}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0 < self.x0_index < self.n_cells:
            raise ValueError(
                f"x0_index={self.x0_index} must be an interior node index"
            )

    @property
    def dx(self) -> float:
        return self.L / self.n_cells

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def x0(self) -> float:
        return self.x0_index * self.dx

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def x_faces(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    def space_weights(self) -> np.ndarray:
        """Trapezoid weights on the nodes; also the lumped mass diagonal."""
        w = np.full(self.n_cells + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def time_weights(self, rule: str = "trapezoid") -> np.ndarray:
        """Quadrature weights over the time levels.

        ``"trapezoid"`` is the composite trapezoid rule. ``"backward"`` is the
        right-endpoint rule (weight ``dt`` on levels ``1..n_steps``, zero on
        level 0), the rule consistent with backward Euler stepping.
        """
        w = np.full(self.n_steps + 1, self.dt)
        if rule == "trapezoid":
            w[0] = w[-1] = 0.5 * self.dt
        elif rule == "backward":
            w[0] = 0.0
        else:
            raise ValueError(f"unknown time rule {rule!r}")
        return w

    def refined(self, space: int = 2, time: int = 2) -> "Grid":
        """Grid with ``space``x cells and ``time``x steps; x0 stays on a node."""
        return Grid(
            self.L,
            self.T,
            self.n_cells * space,
            self.n_steps * time,
            self.x0_index * space,
            self.snap_displacement,
        )


def build_grid(L: float, T: float, x0: float, n_cells: int, n_steps: int) -> Grid:
    """Build a uniform grid and snap ``x0`` to the nearest node.

    Raises ``ValueError`` when ``x0`` is not inside ``(0, L)`` or when the
    nearest node is a boundary node.
    """
    if L <= 0 or T <= 0:
        raise ValueError(f"L and T must be positive, got L={L}, T={T}")
    if not 0 < x0 < L:
        raise ValueError(f"x0={x0} must lie strictly inside (0, {L})")
    if n_cells < 4:
        raise ValueError(f"n_cells must be >= 4, got {n_cells}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    dx = L / n_cells
    index = int(math.floor(x0 / dx + 0.5))
    if index <= 0 or index >= n_cells:
        raise ValueError(
            f"x0={x0} snaps to boundary node {index}; refine the grid"
        )
    return Grid(float(L), float(T), int(n_cells), int(n_steps), index, x0 - index * dx)


@dataclass(frozen=True)
class SpaceTimeField:
    """Samples ``values[k, i]`` at time level ``k`` and node ``i``."""

    values: np.ndarray
    grid: Grid = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_steps + 1, self.grid.n_cells + 1)
        if values.shape != expected:
            raise ValueError(f"field shape {values.shape} != {expected}")
        object.__setattr__(self, "values", values)

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    @property
    def initial(self) -> np.ndarray:
        return self.values[0]

    def x_derivative(self) -> np.ndarray:
        """Cell-wise difference quotients, shape ``(n_steps+1, n_cells)``."""
        return np.diff(self.values, axis=1) / self.grid.dx


def check_spatial(values, grid: Grid, name: str = "field") -> np.ndarray:
    """Return ``values`` as a float vector of nodal length or raise."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.n_cells + 1,):
        raise ValueError(
            f"{name} has shape {arr.shape}, expected ({grid.n_cells + 1},)"
        )
    return arr


def integrate_space(values, grid: Grid) -> float:
    """Trapezoid rule over ``[0, L]`` for nodal samples."""
    arr = check_spatial(values, grid)
    return float(grid.space_weights() @ arr)


def integrate_spacetime(field: SpaceTimeField, rule: str = "trapezoid") -> float:
    """Tensor quadrature over ``Q``: trapezoid in space, ``rule`` in time."""
    g = field.grid
    return float(g.time_weights(rule) @ field.values @ g.space_weights())
