"""Log-gamma, digamma and trigamma for positive real arguments.

All three functions accept scalars or arrays and return the same shape.
Arguments below ``_SHIFT`` are moved up with the recurrence relations and
then evaluated with the Stirling-type asymptotic series. ``log_gamma`` uses
a Taylor series around 2 on ``[0.5, 2.5]`` so that relative accuracy holds
close to its roots at 1 and 2.
"""

import numpy as np

from simplexreg.errors import DomainError

__all__ = ["log_gamma", "digamma", "trigamma"]

_SHIFT = 6.0
_EULER = 0.5772156649015329
_HALF_LOG_2PI = 0.9189385332046728

# Bernoulli numbers B_2, B_4, ..., B_16
_BERNOULLI = np.array([
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
])

# zeta(k) - 1 for k = 2, ..., 32
_ZETA_MINUS_ONE = np.array([
    0.6449340668482264, 0.2020569031595943, 0.08232323371113819,
    0.03692775514336993, 0.01734306198444914, 0.008349277381922827,
    0.00407735619794434, 0.0020083928260822143, 0.0009945751278180853,
    0.0004941886041194645, 0.0002460865533080483, 0.00012271334757848915,
    6.124813505870483e-05, 3.058823630702049e-05, 1.528225940865187e-05,
    7.637197637899763e-06, 3.81729326499984e-06, 1.908212716553939e-06,
    9.539620338727962e-07, 4.769329867878064e-07, 2.38450502727733e-07,
    1.1921992596531106e-07, 5.960818905125948e-08, 2.980350351465228e-08,
    1.4901554828365043e-08, 7.45071178983543e-09, 3.725334024788457e-09,
    1.862659723513049e-09, 9.313274324196682e-10, 4.656629065033784e-10,
    2.3283118336765053e-10,
])


def _check(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} requires finite positive arguments")
    return arr


def _shift_up(x):
    """Return ``(x + j, j)`` with the smallest integer ``j`` making x + j >= 6."""
    steps = np.maximum(np.ceil(_SHIFT - x), 0.0)
    return x + steps, steps.astype(int)


def _lgamma_near_two(z):
    # log Gamma(2 + z) for |z| <= 0.5
    k = np.arange(2, 2 + _ZETA_MINUS_ONE.size)
    coef = (-1.0) ** k * _ZETA_MINUS_ONE / k
    total = np.zeros_like(z)
    for c in coef[::-1]:
        total = (total + c) * z
    return (1.0 - _EULER) * z + total * z


def _lgamma_stirling(y):
    inv = 1.0 / y
    inv2 = inv * inv
    series = np.zeros_like(y)
    for k in range(_BERNOULLI.size, 0, -1):
        series = series * inv2 + _BERNOULLI[k - 1] / (2 * k * (2 * k - 1))
    return (y - 0.5) * np.log(y) - y + _HALF_LOG_2PI + series * inv


def log_gamma(x):
    """Natural logarithm of the gamma function for ``x > 0``."""
    x = _check(x, "log_gamma")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    low = x < 0.5
    mid = (x >= 0.5) & (x <= 2.5)
    high = x > 2.5

    if np.any(mid):
        xm = x[mid]
        upper = xm >= 1.5
        res = np.empty_like(xm)
        res[upper] = _lgamma_near_two(xm[upper] - 2.0)
        # Gamma(x) = Gamma(x + 1) / x with x + 1 in [2, 2.5)
        zl = xm[~upper] - 1.0
        res[~upper] = _lgamma_near_two(zl) - np.log1p(zl)
        out[mid] = res
    if np.any(low):
        xl = x[low]
        # Gamma(x) = Gamma(x + 2) / (x (x + 1)), x + 2 in [2, 2.5)
        out[low] = _lgamma_near_two(xl) - np.log1p(xl) - np.log(xl)
    if np.any(high):
        xh = x[high]
        y, steps = _shift_up(xh)
        # log of the rising product x (x+1) ... (x+steps-1)
        acc = np.zeros_like(xh)
        for j in range(int(steps.max(initial=0))):
            active = steps > j
            acc[active] += np.log(xh[active] + j)
        out[high] = _lgamma_stirling(y) - acc
    return out[0] if scalar else out


def digamma(x):
    """Logarithmic derivative of the gamma function for ``x > 0``."""
    x = _check(x, "digamma")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    y, steps = _shift_up(x)
    acc = np.zeros_like(x)
    for j in range(int(steps.max(initial=0))):
        active = steps > j
        acc[active] += 1.0 / (x[active] + j)
    inv2 = 1.0 / (y * y)
    series = np.zeros_like(y)
    for k in range(_BERNOULLI.size, 0, -1):
        series = series * inv2 + _BERNOULLI[k - 1] / (2 * k)
    out = np.log(y) - 0.5 / y - series * inv2 - acc
    return out[0] if scalar else out


def trigamma(x):
    """Second derivative of ``log_gamma`` for ``x > 0``."""
    x = _check(x, "trigamma")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    y, steps = _shift_up(x)
    acc = np.zeros_like(x)
    for j in range(int(steps.max(initial=0))):
        active = steps > j
        acc[active] += 1.0 / (x[active] + j) ** 2
    inv = 1.0 / y
    inv2 = inv * inv
    series = np.zeros_like(y)
    for k in range(_BERNOULLI.size, 0, -1):
        series = series * inv2 + _BERNOULLI[k - 1]
    out = inv + 0.5 * inv2 + series * inv2 * inv + acc
    return out[0] if scalar else out
