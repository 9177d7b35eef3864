"""Special functions, reference distributions and the quasi-Newton optimizer."""

from simplexreg.numerics.distributions import (
    f_cdf,
    f_sf,
    normal_cdf,
    normal_two_sided_p,
)
from simplexreg.numerics.optimize import (
    OptimizeResult,
    OptimizerProblem,
    check_gradient,
    minimize,
)
from simplexreg.numerics.special import digamma, log_gamma, trigamma

__all__ = [
    "log_gamma",
    "digamma",
    "trigamma",
    "f_cdf",
    "f_sf",
    "normal_cdf",
    "normal_two_sided_p",
    "OptimizerProblem",
    "OptimizeResult",
    "minimize",
    "check_gradient",
]
