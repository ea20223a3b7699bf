"""One-step integrators for mechanical systems built on Hermite trial functions.

The trajectory over each step is a Hermite polynomial that carries position
and velocity (and optionally higher derivatives) at both ends, so the
numerical solution is continuous in configuration and velocity. Two families
of step equations are provided: stationarity of the one-step action
(``variational``) and a Legendre-weighted residual of the equations of motion
(``galerkin``). Two discrete-mechanics integrators serve as baselines.
"""
from .analysis import (
    ConvergenceReport,
    StabilityReport,
    SymplecticityReport,
    amplification_closed_form,
    amplification_numeric,
    convergence_study,
    energy_error_series,
    reference_solution,
    stability_sweep,
    step_jacobian,
    symplecticity_defect,
)
from .basis import cubic_shape, hermite_general, hermite_shapes, shifted_legendre
from .quadrature import QuadratureRule, gauss_legendre, integrate
from .solver import ConvergenceError, SolveReport, SolverConfig, newton_solve
from .steppers import (
    HermiteSegment,
    StepFailure,
    StepperKind,
    Trajectory,
    dense_eval,
    discrete_forces,
    galerkin_step,
    galerkin_step_general,
    midpoint_vi_step,
    quadratic_vi_step,
    simulate,
    variational_step,
    variational_step_general,
)
from .systems import (
    AeroParams,
    State,
    SystemModel,
    build_system,
    eom_residual,
    make_aeroelastic,
    make_double_well,
    make_duffing,
    make_free_particle,
    make_sho,
)

__all__ = [
    "cubic_shape",
    "hermite_general",
    "hermite_shapes",
    "shifted_legendre",
    "QuadratureRule",
    "gauss_legendre",
    "integrate",
    "ConvergenceError",
    "SolveReport",
    "SolverConfig",
    "newton_solve",
    "ConvergenceReport",
    "StabilityReport",
    "SymplecticityReport",
    "amplification_closed_form",
    "amplification_numeric",
    "convergence_study",
    "energy_error_series",
    "reference_solution",
    "stability_sweep",
    "step_jacobian",
    "symplecticity_defect",
    "HermiteSegment",
    "StepFailure",
    "StepperKind",
    "Trajectory",
    "dense_eval",
    "discrete_forces",
    "galerkin_step",
    "galerkin_step_general",
    "midpoint_vi_step",
    "quadratic_vi_step",
    "simulate",
    "variational_step",
    "variational_step_general",
    "AeroParams",
    "State",
    "SystemModel",
    "build_system",
    "eom_residual",
    "make_aeroelastic",
    "make_double_well",
    "make_duffing",
    "make_free_particle",
    "make_sho",
]

__version__ = "0.1.0"
