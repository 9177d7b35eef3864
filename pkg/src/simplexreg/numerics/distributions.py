"""Reference distribution functions used for p-values."""

import math

import numpy as np
from scipy import special

from simplexreg.errors import DomainError

__all__ = ["f_cdf", "f_sf", "normal_cdf", "normal_two_sided_p"]


def _check_df(df1, df2):
    for name, df in (("df1", df1), ("df2", df2)):
        if not (np.isfinite(df) and df > 0):
            raise DomainError(f"{name} must be positive and finite, got {df!r}")


def _f_arg(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError(f"{name} requires x >= 0")
    return x


def _scalar(out, x):
    return float(out) if np.ndim(x) == 0 else out


def f_cdf(x, df1, df2):
    """Cumulative distribution function of the F distribution.

    Evaluated through the regularized incomplete beta function,
    ``I_{d1 x / (d1 x + d2)}(d1 / 2, d2 / 2)``. ``x`` may be an array.
    """
    _check_df(df1, df2)
    xa = _f_arg(x, "f_cdf")
    with np.errstate(invalid="ignore"):
        t = np.where(np.isinf(xa), 1.0, df1 * xa / (df1 * xa + df2))
    return _scalar(special.betainc(0.5 * df1, 0.5 * df2, t), x)


def f_sf(x, df1, df2):
    """Upper tail ``1 - f_cdf(x)`` computed without cancellation."""
    _check_df(df1, df2)
    xa = _f_arg(x, "f_sf")
    # I_{1-t}(b, a) = 1 - I_t(a, b)
    u = df2 / (df1 * xa + df2)
    return _scalar(special.betainc(0.5 * df2, 0.5 * df1, u), x)


def normal_cdf(z):
    """Standard normal cumulative distribution function."""
    return 0.5 * special.erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


def normal_two_sided_p(z):
    """Two-sided p-value ``2 * (1 - Phi(|z|))`` of a standard normal statistic."""
    return special.erfc(np.abs(np.asarray(z, dtype=float)) / math.sqrt(2.0))
