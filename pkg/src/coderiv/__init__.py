"""Generalized derivatives, covering constants and a parametric solver for
angle-doubling maps on R^2 and R^4."""

from .covering import Method, covering_estimate, h_covering_bound, sigma_min
from .derivatives import (
    CoderivKind,
    CoderivResult,
    coderivative_action,
    coderivative_f,
    coderivative_g,
    coderivative_matrix,
    coderivative_matrix_f,
    jacobian,
    jacobian_f,
    jacobian_g,
    jacobian_h,
)
from .errors import ConfigError, DomainError, NoConvergence, OverflowGuard
from .mappings import MapId, eval_f, eval_g, eval_h, evaluate

__version__ = "0.1.0"

__all__ = [
    "CoderivKind",
    "CoderivResult",
    "ConfigError",
    "DomainError",
    "MapId",
    "Method",
    "NoConvergence",
    "OverflowGuard",
    "coderivative_action",
    "coderivative_f",
    "coderivative_g",
    "coderivative_matrix",
    "coderivative_matrix_f",
    "covering_estimate",
    "eval_f",
    "eval_g",
    "eval_h",
    "evaluate",
    "h_covering_bound",
    "jacobian",
    "jacobian_f",
    "jacobian_g",
    "jacobian_h",
    "sigma_min",
]
