"""Numerical laboratory for Navier-Stokes with initial data in weighted L^p spaces.

Periodic pseudo-spectral discretization of a box standing in for R^3, with
weighted norms, a threshold splitting of the data, the mollified equations,
a priori diagnostics and a convergence study.
"""
from .calderon import SplitConfig, SplitResult, calderon_split, choose_threshold, threshold_split
from .estimates import (
    EnergyBudget,
    ExistenceBounds,
    StarNormReport,
    calibrate_constants,
    choose_lambda,
    energy_budget,
    existence_bounds,
    pressure_q,
    rescale_consistency,
    rescale_field,
    star_norms,
)
from .fields import make_test_field
from .grid import Grid
from .io import load_field, save_field
from .mollified import (
    MollifierSpec,
    SolverConfig,
    Trajectory,
    duhamel_residual,
    mollify,
    nonlinear_term,
    solve_b,
    solve_mollified,
    step,
    v_residual,
)
from .runner import ConvergenceReport, convergence_study, pipeline
from .spectral import (
    derivative,
    divergence_field,
    heat_semigroup,
    leray_project,
    oseen_apply,
    riesz,
    divergence_of_tensor,
)
from .weighted import NormReport, kernel_bound_check, weight_value, weighted_hs_norm, weighted_lp_norm

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport", "EnergyBudget", "ExistenceBounds", "Grid", "MollifierSpec", "NormReport",
    "SolverConfig", "SplitConfig", "SplitResult", "StarNormReport", "Trajectory",
    "calderon_split", "calibrate_constants", "choose_lambda", "choose_threshold", "convergence_study",
    "derivative", "divergence_field", "duhamel_residual", "energy_budget", "existence_bounds",
    "heat_semigroup", "kernel_bound_check", "leray_project", "load_field", "make_test_field", "mollify",
    "nonlinear_term", "oseen_apply", "pipeline", "pressure_q", "rescale_consistency", "rescale_field",
    "riesz", "save_field", "solve_b", "solve_mollified", "star_norms", "step", "divergence_of_tensor",
    "threshold_split", "v_residual", "weight_value", "weighted_hs_norm", "weighted_lp_norm",
]
