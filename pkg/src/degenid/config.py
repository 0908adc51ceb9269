"""Schema of YAML experiment configs.

Top-level keys::

    mode: simulate | identify | closed_form
    seed: 0
    grid: {L, T, x0, n_cells, n_steps}
    bc: dirichlet | dirichlet_neumann
    y0: "<expr in x>"
    f: "<expr in x, t>"
    coefficient: "<expr in x>"            # simulate
    envelopes: {kind: power, c_M, c_m, n, u0, uL, u_inf}
             | {kind: expr, lower, upper, u0, uL, u_inf}
    epsilon: 0.0                          # closed_form
    cost: {kind: final_time}
        | {kind: least_squares, lambda1, lambda2, lambda3, M_f, M_T, M, targets_from}
    optimizer: {epsilon_schedule, step0, armijo_c, max_iters, grad_tol}
    init: "<expr in x>"                   # identify, optional
    init_perturbation: 0.0                # identify, seeded uniform noise
    write_trajectory: false

Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .expressions import ExpressionError, parse_expression


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _expr(v):
    if v is None:
        return v
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = repr(float(v))
    parse_expression(v)
    return v


class GridConfig(_Strict):
    L: float = Field(gt=0)
    T: float = Field(gt=0)
    x0: float
    n_cells: int = Field(default=200, ge=4)
    n_steps: int = Field(default=200, ge=1)


class PowerEnvelopes(_Strict):
    kind: Literal["power"]
    c_M: float
    c_m: float
    n: float
    u0: Optional[float] = None
    uL: Optional[float] = None
    u_inf: float = Field(default=10.0, ge=0)


class ExprEnvelopes(_Strict):
    kind: Literal["expr"]
    lower: str
    upper: str
    u0: Optional[float] = None
    uL: Optional[float] = None
    u_inf: float = Field(default=10.0, ge=0)

    _check = field_validator("lower", "upper", mode="before")(_expr)


class FinalTimeCostConfig(_Strict):
    kind: Literal["final_time"]


class LeastSquaresCostConfig(_Strict):
    kind: Literal["least_squares"]
    lambda1: float = Field(default=0.0, ge=0)
    lambda2: float = Field(default=0.0, ge=0)
    lambda3: float = Field(default=0.0, ge=0)
    M_f: float = 0.0
    M_T: float = 0.0
    M: float = 0.0
    targets_from: Optional[str] = None

    _check = field_validator("targets_from", mode="before")(_expr)

    @model_validator(mode="after")
    def _weights(self):
        if not (self.lambda1 > 0 or self.lambda2 > 0 or self.lambda3 > 0):
            raise ValueError("at least one of lambda1, lambda2, lambda3 must be positive")
        return self


class OptimizerConfig(_Strict):
    epsilon_schedule: List[float] = Field(default=[0.4, 0.2, 0.1, 0.05], min_length=1)
    step0: Optional[float] = Field(default=None, gt=0)
    armijo_c: float = Field(default=1e-4, gt=0, lt=1)
    max_iters: int = Field(default=200, ge=0)
    grad_tol: float = Field(default=1e-6, gt=0)

    @field_validator("epsilon_schedule")
    @classmethod
    def _schedule(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("entries must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("schedule must be strictly decreasing")
        return v


class ExperimentConfig(_Strict):
    mode: Literal["simulate", "identify", "closed_form"]
    seed: int = 0
    grid: GridConfig
    bc: Literal["dirichlet", "dirichlet_neumann"] = "dirichlet"
    y0: str = "0"
    f: str = "0"
    coefficient: Optional[str] = None
    envelopes: Optional[Union[PowerEnvelopes, ExprEnvelopes]] = Field(default=None, discriminator="kind")
    epsilon: float = Field(default=0.0, ge=0)
    cost: Optional[Union[FinalTimeCostConfig, LeastSquaresCostConfig]] = Field(
        default=None, discriminator="kind"
    )
    optimizer: OptimizerConfig = OptimizerConfig()
    init: Optional[str] = None
    init_perturbation: float = Field(default=0.0, ge=0)
    write_trajectory: bool = False

    _check = field_validator("y0", "f", "coefficient", "init", mode="before")(_expr)

    @model_validator(mode="after")
    def _mode_requirements(self):
        if self.mode == "simulate" and self.coefficient is None:
            raise ValueError("simulate mode needs 'coefficient'")
        if self.mode in ("identify", "closed_form") and self.envelopes is None:
            raise ValueError(f"{self.mode} mode needs 'envelopes'")
        if self.mode == "identify" and self.cost is None:
            raise ValueError("identify mode needs 'cost'")
        return self


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_config(raw: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Validate a nested mapping, applying dotted-key ``overrides`` first."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: config must be a mapping")
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{p}: expected a mapping")
        node[leaf] = value
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_validation(err)) from None
    except ExpressionError as err:
        raise ConfigError(str(err)) from None


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"YAML error in {path}: {err}") from None
    return parse_config(raw, overrides)
