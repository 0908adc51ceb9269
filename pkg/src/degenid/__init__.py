"""Identification of interior-degenerate diffusion coefficients by adjoint-based optimal control."""

from .grid import Grid, SpaceTimeField, build_grid, integrate_space, integrate_spacetime
from .coefficients import (
    AdmissibleSetSpec,
    ClosedFormSolution,
    CoefficientProfile,
    InfeasibleSpecError,
    closed_form_optimizer,
    make_power_envelopes,
    maximal_admissible_element,
    project_onto_admissible,
    verify_eikonal_structure,
)
from .forward import (
    BoundaryCondition,
    ForwardProblem,
    StateData,
    assemble_stiffness,
    solve_forward,
    solve_variation,
)
from .adjoint import AdjointProblem, solve_adjoint
from .cost import (
    CostSpec,
    FinalTimeCost,
    KktDiagnostics,
    Residuals,
    eval_cost,
    eval_flux_integral,
    eval_gradient_field,
    kkt_decompose,
)

__version__ = "0.1.0"
