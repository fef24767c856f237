"""Exactly solvable three-level field-matter system: closed-form solutions,
a dressing engine that regenerates them from seed backgrounds, a direct
numerical propagator, and the residual harness that cross-checks all three.
"""

from . import algebra, analytic, darboux, mbsolver, model, scenarios, verify  # noqa: F401
from .errors import LambdaMBError  # noqa: F401

__all__ = [
    "algebra",
    "analytic",
    "darboux",
    "mbsolver",
    "model",
    "scenarios",
    "verify",
    "LambdaMBError",
]
