"""Integral deferred correction solvers for stiff singular perturbation
problems, with composition, stability, and convergence-verification tools."""

from .tableau import ButcherTableau, builtin, builtin_names
from .quadrature import IndcGrid, build_grid
from .problems import (SppProblem, scalar_linear, van_der_pol,
                       reduced_resolvent, PROBLEMS)
from .solver import (IndcScheme, StepState, SolverError, NewtonError,
                     DivergenceError, predict, correct, solve, irk_step)
from .compose import ComposedTableau, compose_indc_be, step_equivalence
from .stability import (StabilityScan, amplification, amplification_many,
                        scan_region, l_stability_probe)
from .harness import (ErrorTable, OrderPrediction, VerifyReport, sweep,
                      fit_order, predict_orders, verify, reference_solution,
                      divergence_factor)
from .schemes import parse_scheme, format_scheme, SchemeParseError

__version__ = "0.1.0"

__all__ = [
    "ButcherTableau", "builtin", "builtin_names",
    "IndcGrid", "build_grid",
    "SppProblem", "scalar_linear", "van_der_pol", "reduced_resolvent",
    "PROBLEMS",
    "IndcScheme", "StepState", "SolverError", "NewtonError",
    "DivergenceError", "predict", "correct", "solve", "irk_step",
    "ComposedTableau", "compose_indc_be", "step_equivalence",
    "StabilityScan", "amplification", "amplification_many", "scan_region",
    "l_stability_probe",
    "ErrorTable", "OrderPrediction", "VerifyReport", "sweep", "fit_order",
    "predict_orders", "verify", "reference_solution", "divergence_factor",
    "parse_scheme", "format_scheme", "SchemeParseError",
]
