"""Experiment presets and config-driven runs writing plot-ready CSV."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import io
from .coefficients import (
    AdmissibleSetSpec,
    InfeasibleSpecError,
    closed_form_optimizer,
    default_initial_guess,
    envelopes_from_functions,
    make_power_envelopes,
    project_onto_admissible,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .cost import CostSpec, FinalTimeCost, eval_cost
from .expressions import parse_expression
from .forward import BoundaryCondition, StateData, solve_forward
from .grid import Grid, SpaceTimeField, build_grid, integrate_space
from .identify import IdentifyConfig, continue_in_epsilon


class NumericalFailure(RuntimeError):
    """A run failed for numerical reasons (infeasible set, solver breakdown)."""


def superlevel_measure(values: np.ndarray, grid: Grid, level: float) -> float:
    """Length of ``{x : y(x) > level}`` for the piecewise-linear interpolant."""
    a, b = values[:-1], values[1:]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    frac = np.where(
        lo > level,
        1.0,
        np.where(hi > level, (hi - level) / np.where(hi > lo, hi - lo, 1.0), 0.0),
    )
    return float(np.sum(frac) * grid.dx)


def mollified_unit(grid: Grid, cells: int = 2) -> np.ndarray:
    """``y0 = 1`` ramped to zero over ``cells`` cells at both ends."""
    x = grid.x
    w = cells * grid.dx
    return np.clip(np.minimum(x / w, (grid.L - x) / w), 0.0, 1.0)


def source_field(expr: str, grid: Grid) -> Optional[SpaceTimeField]:
    e = parse_expression(expr)
    vals = e(grid.x[None, :], grid.t[:, None])
    if not np.any(vals):
        return None
    return SpaceTimeField(vals, grid)


def _write_state(out: Path, y: SpaceTimeField, trajectory: bool) -> float:
    g = y.grid
    io.write_profile(out / "yT.csv", g.x, y.final, "yT")
    if trajectory:
        io.write_trajectory(out / "y.csv", y)
    return integrate_space(y.final, g)


# --------------------------------------------------------------------- presets


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    cells: int
    steps: int
    runner: Callable


SEC4 = dict(L=10.0, T=0.5, x0=5.0, y0="sin(4*x)+abs(sin(4*x))", c_M=2.0, c_m=1.0, u_inf=10.0)
FIG3 = dict(L=1.0, T=2.0, x0=0.7, c_M=20.0, c_m=1.0, n=2.0, u0=3.0, uL=1.0, u_inf=10.0, y0="x")
FIG12 = dict(L=1.0, T=2.0, x0=0.5, exponents=(2.0, 4.0), level=0.9)


def _closed_form_run(spec: AdmissibleSetSpec, y0_expr: str, bc, out: Path) -> dict:
    g = spec.grid
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol = closed_form_optimizer(spec)
    data = StateData(g, parse_expression(y0_expr)(g.x), None, bc)
    y = solve_forward(data.problem(sol.profile))
    io.write_profile(out / "u.csv", g.x, sol.profile.values)
    I = _write_state(out, y, False)
    return {
        "I": I,
        "x1": sol.x1,
        "x2": sol.x2,
        "slope_bound_ok": sol.slope_bound_ok,
        "warnings": [str(w.message) for w in caught],
    }


def _sec4(n: float):
    def run(out: Path, cells: int, steps: int, seed: int) -> dict:
        p = SEC4
        g = build_grid(p["L"], p["T"], p["x0"], cells, steps)
        spec = make_power_envelopes(p["c_M"], p["c_m"], n, g, u_inf=p["u_inf"])
        summary = _closed_form_run(spec, p["y0"], BoundaryCondition.DIRICHLET_NEUMANN, out)
        summary["n"] = n
        return summary

    return run


def _fig3(out: Path, cells: int, steps: int, seed: int) -> dict:
    p = FIG3
    g = build_grid(p["L"], p["T"], p["x0"], cells, steps)
    spec = make_power_envelopes(
        p["c_M"], p["c_m"], p["n"], g, u_inf=p["u_inf"], u0=p["u0"], uL=p["uL"]
    )
    return _closed_form_run(spec, p["y0"], BoundaryCondition.DIRICHLET_NEUMANN, out)


def _fig12(out: Path, cells: int, steps: int, seed: int) -> dict:
    p = FIG12
    g = build_grid(p["L"], p["T"], p["x0"], cells, steps)
    y0 = mollified_unit(g)
    measures = {}
    finals = {}
    for n in p["exponents"]:
        u = np.abs(g.x - g.x0) ** n
        y = solve_forward(StateData(g, y0, None, BoundaryCondition.DIRICHLET).problem(u))
        tag = f"n{n:g}"
        io.write_profile(out / f"u_{tag}.csv", g.x, u)
        io.write_profile(out / f"yT_{tag}.csv", g.x, y.final, "yT")
        measures[tag] = superlevel_measure(y.final, g, p["level"])
        finals[tag] = integrate_space(y.final, g)
    return {"level": p["level"], "measure_above_level": measures, "I": finals}


PRESETS = {
    "fig12_qualitative": Preset(
        "fig12_qualitative", "state for u=|x-0.5|^n, n=2,4, y0=1, T=2", 200, 400, _fig12
    ),
    "fig3_closed_form": Preset(
        "fig3_closed_form", "closed-form optimizer for u_M=20(x-0.7)^2", 200, 200, _fig3
    ),
    "sec4_n1": Preset("sec4_n1", "closed form and I for n=1", 400, 400, _sec4(1.0)),
    "sec4_n2": Preset("sec4_n2", "closed form and I for n=2", 400, 400, _sec4(2.0)),
    "sec4_n3": Preset("sec4_n3", "closed form and I for n=3", 400, 400, _sec4(3.0)),
}


def run_preset(
    name: str,
    out,
    cells: Optional[int] = None,
    steps: Optional[int] = None,
    seed: int = 0,
) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown name {name!r}; choose from {sorted(PRESETS)}")
    preset = PRESETS[name]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cells = cells or preset.cells
    steps = steps or preset.steps
    try:
        summary = preset.runner(out, cells, steps, seed)
    except (InfeasibleSpecError, FloatingPointError) as err:
        raise NumericalFailure(str(err)) from err
    except ValueError as err:
        raise ConfigError(str(err)) from err
    meta = {"preset": name, "cells": cells, "steps": steps, "seed": seed}
    io.write_json(out / "meta.json", meta)
    summary = {"preset": name, **summary}
    io.write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------- config runs


def _build_grid(cfg: ExperimentConfig) -> Grid:
    g = cfg.grid
    return build_grid(g.L, g.T, g.x0, g.n_cells, g.n_steps)


def _build_spec(cfg: ExperimentConfig, grid: Grid) -> AdmissibleSetSpec:
    e = cfg.envelopes
    if e.kind == "power":
        return make_power_envelopes(e.c_M, e.c_m, e.n, grid, e.u_inf, 0.0, e.u0, e.uL)
    lower = parse_expression(e.lower)
    upper = parse_expression(e.upper)
    return envelopes_from_functions(
        grid, lower, upper, e.u0, e.uL, e.u_inf, 0.0
    )


def _build_cost(cfg: ExperimentConfig, data: StateData):
    c = cfg.cost
    if c.kind == "final_time":
        return FinalTimeCost()
    M_f, M_T, M = c.M_f, c.M_T, c.M
    if c.targets_from is not None:
        g = data.grid
        u_true = parse_expression(c.targets_from)(g.x)
        y = solve_forward(data.problem(u_true))
        probe = CostSpec(1.0, 1.0, 1.0)
        _, res = eval_cost(u_true, y, probe)
        M_f, M_T, M = res.I_f, res.I_T, res.I_M
    return CostSpec(c.lambda1, c.lambda2, c.lambda3, M_f, M_T, M)


def _state_data(cfg: ExperimentConfig, grid: Grid) -> StateData:
    y0 = parse_expression(cfg.y0)(grid.x)
    return StateData(grid, y0, source_field(cfg.f, grid), cfg.bc)


def _run_simulate(cfg, grid, data, out) -> dict:
    u = parse_expression(cfg.coefficient)(grid.x)
    if np.any(u < 0):
        raise ConfigError("coefficient: expression is negative somewhere on the grid")
    y = solve_forward(data.problem(u))
    io.write_profile(out / "u.csv", grid.x, u)
    I = _write_state(out, y, cfg.write_trajectory)
    return {"I": I}


def _run_closed_form(cfg, grid, data, out) -> dict:
    spec = _build_spec(cfg, grid).with_epsilon(cfg.epsilon)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            sol = closed_form_optimizer(spec)
        except ValueError as err:
            raise NumericalFailure(str(err)) from err
    y = solve_forward(data.problem(sol.profile))
    io.write_profile(out / "u.csv", grid.x, sol.profile.values)
    I = _write_state(out, y, cfg.write_trajectory)
    return {
        "I": I,
        "x1": sol.x1,
        "x2": sol.x2,
        "slope_bound_ok": sol.slope_bound_ok,
        "warnings": [str(w.message) for w in caught],
    }


def _run_identify(cfg, grid, data, out) -> dict:
    spec = _build_spec(cfg, grid)
    cost = _build_cost(cfg, data)
    o = cfg.optimizer
    ocfg = IdentifyConfig(tuple(o.epsilon_schedule), o.step0, o.armijo_c, o.max_iters, o.grad_tol)
    first = spec.with_epsilon(ocfg.epsilon_schedule[0])
    if cfg.init is not None:
        base = parse_expression(cfg.init)(grid.x)
    else:
        base = default_initial_guess(first).values
    if cfg.init_perturbation > 0:
        rng = np.random.default_rng(cfg.seed)
        noise = rng.uniform(-1.0, 1.0, grid.n_nodes) * (first.hi - first.lo)
        base = base + cfg.init_perturbation * noise
    u_init = project_onto_admissible(base, first)
    J_init = eval_cost(u_init, solve_forward(data.problem(u_init)), cost)[0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = continue_in_epsilon(spec, data, cost, ocfg, u_init)
    io.write_profile(out / "u.csv", grid.x, res.u_star.values)
    I = _write_state(out, res.y_star, cfg.write_trajectory)
    stage = np.zeros(len(res.J_history), dtype=int)
    for j, s in enumerate(res.stage_starts):
        stage[s:] = j
    io.write_columns(
        out / "J_history.csv",
        ["index", "stage", "epsilon", "J"],
        [
            [str(i) for i in range(len(res.J_history))],
            [str(s) for s in stage],
            [res.eps_trace[s].epsilon for s in stage],
            res.J_history,
        ],
    )
    io.write_kkt(out / "kkt.csv", res.kkt)
    trace = [
        {
            "epsilon": s.epsilon,
            "sup_change": s.sup_change,
            "J": s.J,
            "iterations": s.iterations,
            "converged": s.converged,
            "line_search_failed": s.line_search_failed,
        }
        for s in res.eps_trace
    ]
    return {
        "I": I,
        "J_init": J_init,
        "J_final": res.J,
        "iterations": res.iterations,
        "converged": res.converged,
        "line_search_failed": res.line_search_failed,
        "eps_trace": trace,
        "kkt_relative_violation": res.kkt.relative_violation,
        "warnings": [str(w.message) for w in caught],
    }


RUNNERS = {"simulate": _run_simulate, "closed_form": _run_closed_form, "identify": _run_identify}


def run_config(
    source,
    out=None,
    cells: Optional[int] = None,
    steps: Optional[int] = None,
    seed: Optional[int] = None,
) -> dict:
    """Run a config file (path) or mapping; CLI overrides win over file values."""
    overrides = {"grid.n_cells": cells, "grid.n_steps": steps, "seed": seed}
    if isinstance(source, dict):
        cfg = parse_config(source, overrides)
    else:
        cfg = load_config(source, overrides)
    if out is None:
        raise ConfigError("out: an output directory is required")
    out = Path(out)
    try:
        grid = _build_grid(cfg)
        data = _state_data(cfg, grid)
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from err
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary = RUNNERS[cfg.mode](cfg, grid, data, out)
    except (InfeasibleSpecError, FloatingPointError) as err:
        raise NumericalFailure(str(err)) from err
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err
    io.write_json(out / "meta.json", {"config": cfg.model_dump(mode="json")})
    summary = {"mode": cfg.mode, **summary}
    io.write_json(out / "summary.json", summary)
    return summary
