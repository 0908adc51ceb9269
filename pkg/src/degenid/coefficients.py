"""Admissible coefficient sets, projection onto them, and the closed-form optimizer.

An admissible coefficient is bounded between two envelopes that vanish at the
degeneracy node, takes prescribed endpoint values and has slope at most
``u_inf``. With a regularization level ``epsilon > 0`` the box becomes
``[u_m + eps, u_M + 2 eps]`` and the endpoint values shift to
``u0 + 1.5 eps`` / ``uL + 1.5 eps``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .grid import Grid, check_spatial

Envelope = Callable[[np.ndarray], np.ndarray]

# Relative slack on discrete slope checks; absorbs round-off in the sweeps.
LIPSCHITZ_RTOL = 1e-12
ENDPOINT_SHIFT = 1.5


class InfeasibleSpecError(ValueError):
    """Box, endpoint and slope constraints cannot be met simultaneously."""


@dataclass(frozen=True, eq=False)
class AdmissibleSetSpec:
    """Data of the admissible set ``U`` (``epsilon == 0``) or ``U_eps``.

    ``lower`` and ``upper`` are the envelopes ``u_m``, ``u_M`` sampled on the
    grid nodes. ``lower_fn``/``upper_fn`` optionally give the envelopes as
    functions of ``x``; root finding uses them when present and falls back to
    piecewise-linear interpolation of the samples otherwise.
    """

    grid: Grid
    lower: np.ndarray
    upper: np.ndarray
    u0: float
    uL: float
    u_inf: float
    epsilon: float = 0.0
    lower_fn: Optional[Envelope] = None
    upper_fn: Optional[Envelope] = None

    def __post_init__(self):
        g = self.grid
        lower = check_spatial(self.lower, g, "lower envelope")
        upper = check_spatial(self.upper, g, "upper envelope")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.u_inf < 0:
            raise ValueError(f"u_inf must be >= 0, got {self.u_inf}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        k = g.x0_index
        if lower[k] != 0.0 or upper[k] != 0.0:
            raise ValueError("envelopes must vanish at the degeneracy node")
        rest = np.ones(g.n_nodes, dtype=bool)
        rest[k] = False
        if np.any(lower[rest] <= 0.0):
            raise ValueError("lower envelope must be positive away from x0")
        if np.any(lower[rest] >= upper[rest]):
            raise ValueError("lower envelope must lie strictly below the upper one")
        if not lower[0] <= self.u0 <= upper[0]:
            raise ValueError(f"u0={self.u0} outside [{lower[0]}, {upper[0]}]")
        if not lower[-1] <= self.uL <= upper[-1]:
            raise ValueError(f"uL={self.uL} outside [{lower[-1]}, {upper[-1]}]")

    @property
    def lo(self) -> np.ndarray:
        """Lower box bound ``u_m + eps``."""
        return self.lower + self.epsilon

    @property
    def hi(self) -> np.ndarray:
        """Upper box bound ``u_M + 2 eps``."""
        return self.upper + 2.0 * self.epsilon

    @property
    def u0_eps(self) -> float:
        return self.u0 + ENDPOINT_SHIFT * self.epsilon

    @property
    def uL_eps(self) -> float:
        return self.uL + ENDPOINT_SHIFT * self.epsilon

    @property
    def ratio_bound(self) -> float:
        """``max u_M / u_m`` away from x0; finite by construction."""
        mask = self.lower > 0
        return float(np.max(self.upper[mask] / self.lower[mask]))

    @property
    def slope_step(self) -> float:
        return self.u_inf * self.grid.dx

    @property
    def slope_tol(self) -> float:
        return LIPSCHITZ_RTOL * self.slope_step

    def with_epsilon(self, epsilon: float) -> "AdmissibleSetSpec":
        return dataclasses.replace(self, epsilon=float(epsilon))

    def upper_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.upper_fn is not None:
            return np.asarray(self.upper_fn(x), dtype=float)
        return np.interp(x, self.grid.x, self.upper)

    def upper_slope_max(self) -> float:
        """Largest discrete slope of ``u_M`` on the grid."""
        return float(np.max(np.abs(np.diff(self.upper))) / self.grid.dx)


def envelopes_from_functions(
    grid: Grid,
    lower_fn: Envelope,
    upper_fn: Envelope,
    u0: Optional[float] = None,
    uL: Optional[float] = None,
    u_inf: float = 10.0,
    epsilon: float = 0.0,
) -> AdmissibleSetSpec:
    """Sample envelope functions on the nodes; the x0 node is set to exactly 0.

    Endpoint values default to the envelope midpoints.
    """
    x = grid.x
    upper = np.asarray(upper_fn(x), dtype=float).copy()
    lower = np.asarray(lower_fn(x), dtype=float).copy()
    upper[grid.x0_index] = lower[grid.x0_index] = 0.0
    if u0 is None:
        u0 = 0.5 * (upper[0] + lower[0])
    if uL is None:
        uL = 0.5 * (upper[-1] + lower[-1])
    return AdmissibleSetSpec(
        grid, lower, upper, float(u0), float(uL), float(u_inf), float(epsilon),
        lower_fn=lower_fn, upper_fn=upper_fn,
    )


def make_power_envelopes(
    c_M: float,
    c_m: float,
    n: float,
    grid: Grid,
    u_inf: float = 10.0,
    epsilon: float = 0.0,
    u0: Optional[float] = None,
    uL: Optional[float] = None,
) -> AdmissibleSetSpec:
    """Envelopes ``c_M |x - x0|^n`` and ``c_m |x - x0|^n``.

    Endpoint values default to the envelope midpoints. ``n < 1`` is rejected
    because ``1/u`` would then be integrable (weak degeneracy).
    """
    if n < 1:
        raise ValueError(f"exponent n={n} < 1 gives a weakly degenerate coefficient")
    if not c_M > c_m > 0:
        raise ValueError(f"need c_M > c_m > 0, got c_M={c_M}, c_m={c_m}")
    x0 = grid.x0

    def upper_fn(x):
        return c_M * np.abs(np.asarray(x, dtype=float) - x0) ** n

    def lower_fn(x):
        return c_m * np.abs(np.asarray(x, dtype=float) - x0) ** n

    return envelopes_from_functions(grid, lower_fn, upper_fn, u0, uL, u_inf, epsilon)


@dataclass(frozen=True)
class Feasibility:
    box: float
    endpoints: float
    slope: float
    slope_tol: float

    @property
    def ok(self) -> bool:
        return self.box <= 0.0 and self.endpoints <= 0.0 and self.slope <= self.slope_tol


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """Nodal samples of a candidate coefficient together with its admissible set."""

    values: np.ndarray
    spec: AdmissibleSetSpec

    def __post_init__(self):
        object.__setattr__(
            self, "values", check_spatial(self.values, self.spec.grid, "coefficient")
        )

    @property
    def grid(self) -> Grid:
        return self.spec.grid

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.grid.dx

    @property
    def lipschitz_bound(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    def feasibility(self) -> Feasibility:
        s = self.spec
        u = self.values
        box = float(max(np.max(s.lo - u), np.max(u - s.hi), 0.0))
        ends = max(abs(u[0] - s.u0_eps), abs(u[-1] - s.uL_eps))
        slope = float(max(np.max(np.abs(np.diff(u))) - s.slope_step, 0.0))
        return Feasibility(box, float(ends), slope, s.slope_tol)

    @property
    def is_feasible(self) -> bool:
        return self.feasibility().ok

    def with_values(self, values) -> "CoefficientProfile":
        return CoefficientProfile(np.asarray(values, dtype=float), self.spec)


def coefficient_values(u) -> np.ndarray:
    """Nodal array of a profile or of anything array-like."""
    return np.asarray(getattr(u, "values", u), dtype=float)


def lipschitz_envelopes(
    lo: np.ndarray, hi: np.ndarray, a: float, b: float, step: float, tol: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Tightest slope-consistent bounds of ``{lo <= u <= hi, u[0]=a, u[-1]=b, |du| <= step}``.

    ``upper`` is the largest ``step``-Lipschitz minorant of the pinned upper
    bound and ``lower`` the smallest majorant of the pinned lower bound. Every
    member of the set lies between them, and the set is nonempty iff they are
    ordered and hit the pins. Raises :class:`InfeasibleSpecError` otherwise.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if not (lo[0] <= a <= hi[0] and lo[-1] <= b <= hi[-1]):
        raise InfeasibleSpecError("pinned endpoint values lie outside the box")
    lo[0], lo[-1] = a, b
    hi[0], hi[-1] = a, b
    top = _kernels.sweep_down(hi, step, 0.0)
    bottom = _kernels.sweep_up(lo, step, 0.0)
    tol = tol + 1e-14 * max(1.0, float(np.max(np.abs(hi))))
    if abs(top[0] - a) > tol or abs(top[-1] - b) > tol:
        raise InfeasibleSpecError(
            "endpoint values cannot descend to the upper envelope within the slope bound"
        )
    if abs(bottom[0] - a) > tol or abs(bottom[-1] - b) > tol:
        raise InfeasibleSpecError(
            "endpoint values cannot rise to the lower envelope within the slope bound"
        )
    gap = bottom - top
    if np.any(gap > tol):
        i = int(np.argmax(gap))
        raise InfeasibleSpecError(
            f"box and slope constraints incompatible near node {i} (overlap {gap[i]:.3g})"
        )
    return np.minimum(bottom, top), top


def is_feasible_values(u, lo, hi, a, b, step, tol) -> bool:
    u = np.asarray(u, dtype=float)
    return bool(
        u[0] == a
        and u[-1] == b
        and np.all(u >= lo)
        and np.all(u <= hi)
        and np.all(np.abs(np.diff(u)) <= step + tol)
    )


def slope_limited_projection(
    u_raw, lo, hi, a: float, b: float, step: float, tol: float = 0.0, max_passes: int = 100
) -> np.ndarray:
    """Clamp, pin and slope-limit ``u_raw`` until it stops moving.

    Each pass clamps to the slope-consistent box, pins the endpoints and runs
    a forward then a backward downward sweep ``u[i+1] <- min(u[i+1], u[i] +
    step)``, ``u[i] <- min(u[i], u[i+1] + step)``; passes repeat until no node
    moves by more than 1e-12 (relative). Feasible input comes back unchanged.
    """
    u = np.array(u_raw, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if is_feasible_values(u, lo, hi, a, b, step, tol):
        return u
    bottom, top = lipschitz_envelopes(lo, hi, a, b, step, tol)
    scale = max(1.0, float(np.max(np.abs(top))))
    for _ in range(max_passes):
        prev = u
        u = np.clip(prev, bottom, top)
        u[0], u[-1] = a, b
        u = _kernels.sweep_down(u, step, tol)
        if np.max(np.abs(u - prev)) <= 1e-12 * scale:
            break
    if np.any(u < lo - tol - 1e-14 * scale):
        raise InfeasibleSpecError("slope sweeps drove a node below its lower bound")
    return u


def admissible_envelopes(spec: AdmissibleSetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Slope-consistent ``(lower, upper)`` bounds of ``U_eps``."""
    return lipschitz_envelopes(
        spec.lo, spec.hi, spec.u0_eps, spec.uL_eps, spec.slope_step, spec.slope_tol
    )


def maximal_admissible_element(spec: AdmissibleSetSpec) -> CoefficientProfile:
    """Node-wise largest admissible profile (the discrete maximal element)."""
    _, top = admissible_envelopes(spec)
    return CoefficientProfile(top, spec)


def project_onto_admissible(
    u_raw, spec: AdmissibleSetSpec, max_passes: int = 100
) -> CoefficientProfile:
    """Feasibility-restoring map onto ``U_eps`` (see :func:`slope_limited_projection`).

    Not the L2 projection; it is monotone, idempotent and leaves feasible
    profiles untouched.
    """
    if spec.epsilon <= 0:
        raise ValueError("projection requires a regularized set (epsilon > 0)")
    u = check_spatial(coefficient_values(u_raw), spec.grid, "u_raw")
    out = slope_limited_projection(
        u, spec.lo, spec.hi, spec.u0_eps, spec.uL_eps, spec.slope_step, spec.slope_tol, max_passes
    )
    return CoefficientProfile(out, spec)


def default_initial_guess(spec: AdmissibleSetSpec) -> CoefficientProfile:
    """Projection of the envelope midpoint shifted by ``1.5 eps``."""
    mid = 0.5 * (spec.lower + spec.upper) + ENDPOINT_SHIFT * spec.epsilon
    return project_onto_admissible(mid, spec)


def _bisect(fun, a: float, b: float, xtol: float) -> float:
    fa = fun(a)
    if fa == 0.0:
        return a
    fb = fun(b)
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"no sign change on [{a}, {b}]")
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = fun(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _first_root(fun, a: float, b: float, samples: int, xtol: float) -> float:
    """Root of ``fun`` on ``[a, b]`` closest to ``a`` at the scan resolution."""
    xs = np.linspace(a, b, samples + 1)
    vals = np.asarray(fun(xs), dtype=float)
    if vals[0] == 0.0:
        return float(a)
    hits = np.nonzero((np.sign(vals[1:]) != np.sign(vals[0])) | (vals[1:] == 0.0))[0]
    if hits.size == 0:
        raise ValueError("no root bracketed")
    j = int(hits[0])
    if vals[j + 1] == 0.0:
        return float(xs[j + 1])
    return _bisect(lambda s: float(fun(s)), float(xs[j]), float(xs[j + 1]), xtol)


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    profile: CoefficientProfile
    x1: float
    x2: float
    slope_bound_ok: bool

    def __iter__(self):
        return iter((self.profile, self.x1, self.x2))


def closed_form_optimizer(
    spec: AdmissibleSetSpec, xtol: float = 1e-12, scan_per_cell: int = 16
) -> ClosedFormSolution:
    """Piecewise optimizer of the final-time problem.

    Rising line ``u0 + u_inf x`` on ``[0, x1)``, the upper envelope
    ``u_M + 2 eps`` on ``[x1, x2)``, falling line ``uL - u_inf (x - L)`` on
    ``[x2, L]``. ``x1`` is the first intersection of the rising line with the
    envelope in ``[0, x0]``, ``x2`` the last intersection of the falling
    line in ``[x0, L]``.

    The construction presumes ``|u_M'| <= u_inf``; when the sampled envelope
    is steeper a ``UserWarning`` is issued and ``slope_bound_ok`` is False,
    since the envelope piece then violates the slope bound.
    """
    g = spec.grid
    eps2 = 2.0 * spec.epsilon
    a, b, c, L = spec.u0_eps, spec.uL_eps, spec.u_inf, g.L
    x0 = g.x0

    def left(x):
        return spec.upper_at(x) + eps2 - (c * np.asarray(x) + a)

    def right(x):
        return spec.upper_at(x) + eps2 - (-c * (np.asarray(x) - L) + b)

    n_left = max(1, g.x0_index) * scan_per_cell
    n_right = max(1, g.n_cells - g.x0_index) * scan_per_cell
    try:
        x1 = _first_root(left, 0.0, x0, n_left, xtol)
    except ValueError as exc:
        raise ValueError("rising line never meets the upper envelope on [0, x0]") from exc
    try:
        # scan from L towards x0 to get the largest root
        x2 = L - _first_root(lambda s: right(L - np.asarray(s)), 0.0, L - x0, n_right, xtol)
    except ValueError as exc:
        raise ValueError("falling line never meets the upper envelope on [x0, L]") from exc
    if not x1 < x2:
        raise ValueError(f"degenerate construction: x1={x1} >= x2={x2}")

    x = g.x
    u = np.where(
        x < x1,
        a + c * x,
        np.where(x < x2, spec.hi, b - c * (x - L)),
    )
    ok = spec.upper_slope_max() <= c * (1 + LIPSCHITZ_RTOL)
    profile = CoefficientProfile(u, spec)
    if not ok:
        warnings.warn(
            f"upper envelope slope {spec.upper_slope_max():.4g} exceeds u_inf={c}; "
            "closed-form profile is not slope-admissible",
            UserWarning,
            stacklevel=2,
        )
    return ClosedFormSolution(profile, float(x1), float(x2), bool(ok))


@dataclass(frozen=True, eq=False)
class EikonalReport:
    below: np.ndarray
    active: np.ndarray
    violations_below: np.ndarray
    violations_active: np.ndarray
    max_deviation: float

    @property
    def n_below(self) -> int:
        return int(self.below.size)

    @property
    def compliant_fraction(self) -> float:
        """Share of strictly-below nodes with ``|u_x| = u_inf``; 1 if none."""
        if self.below.size == 0:
            return 1.0
        return 1.0 - self.violations_below.size / self.below.size

    @property
    def ok(self) -> bool:
        return self.violations_below.size == 0 and self.violations_active.size == 0


def verify_eikonal_structure(
    u: CoefficientProfile, tol: float, rel_active: float = 1e-6
) -> EikonalReport:
    """Check ``|u_x| = u_inf`` below the upper bound and ``u_x = u_M'`` on it.

    A node is active when ``u >= hi - rel_active * (hi - lo)``. A node in the
    strictly-below set passes when one of its one-sided difference quotients
    has modulus within ``tol`` of ``u_inf``. An active node passes when every
    adjacent cell with both ends active has the slope of ``u_M`` within
    ``tol``. Endpoints are pinned and excluded.
    """
    s = u.spec
    vals = u.values
    dx = s.grid.dx
    n = vals.size
    hi = s.hi
    tol_active = rel_active * (hi - s.lo)
    is_active = vals >= hi - tol_active
    slopes = np.diff(vals) / dx
    env_slopes = np.diff(hi) / dx

    interior = np.arange(1, n - 1)
    below = interior[~is_active[interior]]
    active = interior[is_active[interior]]

    dev_cell = np.abs(np.abs(slopes) - s.u_inf)
    dev_below = np.minimum(dev_cell[below - 1], dev_cell[below])
    bad_below = below[dev_below > tol]

    both_active = is_active[:-1] & is_active[1:]
    dev_env = np.where(both_active, np.abs(slopes - env_slopes), 0.0)
    dev_active = np.maximum(dev_env[active - 1], dev_env[active]) if active.size else np.zeros(0)
    bad_active = active[dev_active > tol]
    max_dev = float(
        max(
            dev_below.max() if dev_below.size else 0.0,
            dev_active.max() if dev_active.size else 0.0,
        )
    )
    return EikonalReport(below, active, bad_below, bad_active, max_dev)
