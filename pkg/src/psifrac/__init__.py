"""Weighted fractional calculus operators and an impulsive fixed-point solver.

The package provides:

* weight functions Psi (identity, power, logarithm, user formulas) and the
  fractional integral / two-parameter derivative taken with respect to them,
* a Picard solver for impulsive problems in the weighted piecewise space,
  including nonlocal initial functionals,
* closed-form existence/uniqueness condition checks and solution diagnostics,
* an expression DSL for problem files and a CLI front end (psifrac).
"""

from .errors import (ConfigError, DomainError, EvalError, GridError,
                     MismatchError, NoConvergence, NonFiniteIterate,
                     NonMonotoneError, ParseError, PsifracError,
                     SingularityError, UnknownIdentifier)
from .expr import evaluate as eval_expr
from .expr import free_variables, parse as parse_expr, pretty as pretty_expr
from .fracops import (OrderPair, SampledFunction, beta_fn, frac_integral,
                      frac_integral_at_nodes, frac_integral_weighted_at_nodes,
                      frac_integral_weighted_start, gamma_fn,
                      hilfer_derivative_numeric, omega_weight)
from .psi import PsiFunction
from .solver import (ConditionReport, ConvergenceRow, GridSolution,
                     ImpulseSchedule, NonlocalSpec, ProblemSpec,
                     ResidualReport, SolutionSegment, check_conditions,
                     convergence_study, estimate_lipschitz,
                     homogeneous_coefficient, picard_step, residual_report,
                     solve_impulsive, solve_nonlocal)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "PsifracError", "DomainError", "NonMonotoneError", "SingularityError",
    "GridError", "ParseError", "UnknownIdentifier", "EvalError",
    "NonFiniteIterate", "NoConvergence", "ConfigError", "MismatchError",
    # expression DSL
    "parse_expr", "eval_expr", "pretty_expr", "free_variables",
    # weight functions and operators
    "PsiFunction", "OrderPair", "SampledFunction", "gamma_fn", "beta_fn",
    "omega_weight", "frac_integral", "frac_integral_at_nodes",
    "frac_integral_weighted_start", "frac_integral_weighted_at_nodes",
    "hilfer_derivative_numeric",
    # solver
    "ImpulseSchedule", "NonlocalSpec", "ProblemSpec", "GridSolution",
    "SolutionSegment", "ConditionReport", "ResidualReport", "ConvergenceRow",
    "homogeneous_coefficient", "picard_step", "solve_impulsive",
    "solve_nonlocal", "estimate_lipschitz", "check_conditions",
    "residual_report", "convergence_study",
]
