"""Projected-gradient identification over ``U_eps`` and continuation in ``eps``."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coefficients import (
    AdmissibleSetSpec,
    CoefficientProfile,
    coefficient_values,
    default_initial_guess,
    project_onto_admissible,
)
from .cost import Cost, Evaluation, FinalTimeCost, KktDiagnostics, evaluate, kkt_decompose
from .forward import BoundaryCondition, StateData
from .grid import SpaceTimeField

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IdentifyConfig:
    """Optimizer settings.

    ``step0=None`` picks ``max(hi - lo) / max|Phi|`` at the first iterate, so
    the first trial step can cross the whole box. Later trial steps use the
    Barzilai-Borwein estimate when it is positive.
    """

    epsilon_schedule: Sequence[float] = (0.4, 0.2, 0.1, 0.05)
    step0: Optional[float] = None
    armijo_c: float = 1e-4
    max_iters: int = 200
    grad_tol: float = 1e-6
    max_backtracks: int = 60
    barzilai_borwein: bool = True

    def __post_init__(self):
        sched = tuple(float(e) for e in self.epsilon_schedule)
        object.__setattr__(self, "epsilon_schedule", sched)
        if not sched:
            raise ValueError("epsilon schedule is empty")
        if any(e <= 0 for e in sched):
            raise ValueError("epsilon schedule must be positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("epsilon schedule must be strictly decreasing")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.step0 is not None and self.step0 <= 0:
            raise ValueError("step0 must be positive")


@dataclass(frozen=True)
class StageSummary:
    epsilon: float
    sup_change: float
    J: float
    iterations: int
    converged: bool
    line_search_failed: bool


@dataclass(eq=False)
class IdentifyResult:
    u_star: CoefficientProfile
    y_star: SpaceTimeField
    J_history: list
    kkt: KktDiagnostics
    eps_trace: list = field(default_factory=list)
    stage_starts: list = field(default_factory=lambda: [0])
    iterations: int = 0
    converged: bool = False
    line_search_failed: bool = False
    phi: Optional[np.ndarray] = None

    @property
    def J(self) -> float:
        return self.J_history[-1]

    def stage_histories(self) -> list:
        bounds = list(self.stage_starts) + [len(self.J_history)]
        return [self.J_history[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def _l2(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(w * a * b))


def solve_p_epsilon(
    spec: AdmissibleSetSpec,
    data: StateData,
    cost: Cost,
    config: IdentifyConfig = IdentifyConfig(),
    u_init=None,
) -> IdentifyResult:
    """Minimize ``cost`` over ``U_eps`` by projected gradient with Armijo backtracking.

    Iterates ``u <- P(u + eta Phi)``; ``Phi`` is the negative L2 gradient, so
    ``J`` decreases to first order. A trial step is accepted when
    ``J_new <= J - c * int (u_new - u) Phi``.
    """
    if spec.epsilon <= 0:
        raise ValueError("solve_p_epsilon needs epsilon > 0")
    if data.grid != spec.grid:
        raise ValueError("state data and admissible set live on different grids")
    if u_init is None:
        u = default_initial_guess(spec)
    else:
        u = project_onto_admissible(coefficient_values(u_init), spec)

    w = spec.grid.space_weights()
    ev = evaluate(u, data, cost)
    history = [ev.J]
    phi_scale = float(np.max(np.abs(ev.phi)))
    width = float(np.max(spec.hi - spec.lo))
    if config.step0 is not None:
        eta = config.step0
    else:
        eta = width / phi_scale if phi_scale > 0 else 1.0
    eta_min = eta * 2.0 ** (-config.max_backtracks)

    converged = phi_scale == 0.0
    failed = False
    it = 0
    while it < config.max_iters and not converged:
        trial = eta
        accepted: Optional[Evaluation] = None
        for _ in range(config.max_backtracks + 1):
            cand = project_onto_admissible(u.values + trial * ev.phi, spec)
            d = cand.values - u.values
            if not np.any(d):
                converged = True
                break
            pred = max(_l2(d, ev.phi, w), 0.0)
            trial_ev = evaluate(cand, data, cost, gradient=False)
            if trial_ev.J <= ev.J - config.armijo_c * pred:
                accepted = evaluate(cand, data, cost)
                break
            trial *= 0.5
        if converged:
            break
        if accepted is None:
            failed = True
            warnings.warn(
                f"line search failed at iteration {it}; returning best iterate",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        it += 1
        step_norm = float(np.max(np.abs(d)))
        s = d
        yk = ev.phi - accepted.phi  # gradient difference, since grad J = -Phi
        u, ev = cand, accepted
        history.append(ev.J)
        log.debug("iter %d J=%.6e eta=%.3e |du|=%.3e", it, ev.J, trial, step_norm)
        if step_norm / trial < config.grad_tol * phi_scale:
            converged = True
            break
        eta = trial
        if config.barzilai_borwein:
            sy = _l2(s, yk, w)
            if sy > 0:
                eta = min(max(_l2(s, s, w) / sy, eta_min), 1e6 * width / max(phi_scale, 1e-300))
            else:
                eta = 2.0 * trial

    kkt = kkt_decompose(u, ev.phi)
    return IdentifyResult(
        u_star=u,
        y_star=ev.y,
        J_history=history,
        kkt=kkt,
        eps_trace=[StageSummary(spec.epsilon, float("nan"), ev.J, it, converged, failed)],
        stage_starts=[0],
        iterations=it,
        converged=converged,
        line_search_failed=failed,
        phi=ev.phi,
    )


def continue_in_epsilon(
    spec: AdmissibleSetSpec,
    data: StateData,
    cost: Cost,
    config: IdentifyConfig = IdentifyConfig(),
    u_init=None,
) -> IdentifyResult:
    """Run :func:`solve_p_epsilon` along ``config.epsilon_schedule``.

    Each stage starts from the previous optimizer re-projected onto the new
    set. ``eps_trace[j].sup_change`` is ``max|u_j - u_{j-1}|`` (NaN for the
    first stage).
    """
    history: list = []
    starts: list = []
    trace: list = []
    prev: Optional[IdentifyResult] = None
    start = u_init
    total = 0
    failed = False
    for eps in config.epsilon_schedule:
        stage_spec = spec.with_epsilon(eps)
        init = prev.u_star.values if prev is not None else start
        res = solve_p_epsilon(stage_spec, data, cost, config, init)
        change = (
            float(np.max(np.abs(res.u_star.values - prev.u_star.values)))
            if prev is not None
            else float("nan")
        )
        starts.append(len(history))
        history.extend(res.J_history)
        s = res.eps_trace[0]
        trace.append(StageSummary(eps, change, s.J, s.iterations, s.converged, s.line_search_failed))
        total += res.iterations
        failed |= res.line_search_failed
        prev = res
    return IdentifyResult(
        u_star=prev.u_star,
        y_star=prev.y_star,
        J_history=history,
        kkt=prev.kkt,
        eps_trace=trace,
        stage_starts=starts,
        iterations=total,
        converged=prev.converged,
        line_search_failed=failed,
        phi=prev.phi,
    )


def solve_p1(
    spec: AdmissibleSetSpec,
    data: StateData,
    config: IdentifyConfig = IdentifyConfig(),
    u_init=None,
) -> IdentifyResult:
    """Minimize ``int y(T)`` (mixed boundary conditions), continuing in ``eps``."""
    if data.bc is not BoundaryCondition.DIRICHLET_NEUMANN:
        raise ValueError("the final-time problem uses Dirichlet-Neumann conditions")
    return continue_in_epsilon(spec, data, FinalTimeCost(), config, u_init)
