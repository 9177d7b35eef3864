"""Dirichlet regression with a log link, and its diagnostics.

The shape parameters of observation ``i`` are
``alpha_id = exp(beta_d . x_i)``, so ``beta`` has one row per part and one
column per design column. Inference uses the observed information, which
is obtained by differencing the analytic gradient.
"""

from dataclasses import dataclass
from typing import NamedTuple
import warnings

import numpy as np

from simplexreg.errors import DegenerateDataError, DomainError
from simplexreg.numerics import (
    OptimizerProblem,
    digamma,
    log_gamma,
    minimize,
    normal_two_sided_p,
    trigamma,
)

__all__ = [
    "dirichlet_log_pdf",
    "dirichlet_marginal_moments",
    "sample_dirichlet",
    "log_likelihood",
    "log_likelihood_gradient",
    "log_likelihood_hessian",
    "DirichletFit",
    "fit_dirichlet_regression",
    "standardized_residuals",
    "composite_residuals",
    "score_residuals",
    "local_influence",
    "overdispersion_statistics",
    "Flag",
    "DiagnosticsReport",
    "diagnose",
]


def _positive(a, name):
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise DomainError(f"{name} must be finite and strictly positive")
    return a


def dirichlet_log_pdf(v, alpha):
    """Log density of a Dirichlet distribution at an interior point ``v``."""
    v = np.asarray(v, dtype=float)
    alpha = _positive(alpha, "alpha")
    if v.shape != alpha.shape:
        raise DomainError("v and alpha must have the same length")
    if np.any(v <= 0) or abs(v.sum() - 1.0) > 1e-8:
        raise DomainError(
            "v must be strictly positive and sum to 1; boundary points need "
            "zero replacement first")
    return float(log_gamma(alpha.sum()) - log_gamma(alpha).sum()
                 + ((alpha - 1.0) * np.log(v)).sum())


def dirichlet_marginal_moments(alpha):
    """Means and variances of the Beta marginals.

    Returns
    -------
    mean, variance : ndarray
        Same shape as ``alpha``; a 2-d input is treated row by row.
    """
    alpha = _positive(alpha, "alpha")
    total = alpha.sum(axis=-1, keepdims=True)
    mean = alpha / total
    var = alpha * (total - alpha) / (total ** 2 * (total + 1.0))
    return mean, var


def sample_dirichlet(alpha, count=None, seed=None):
    """Draw compositions by normalizing independent Gamma(alpha_d, 1) variates.

    ``alpha`` is either a D-vector (``count`` rows are drawn) or an
    ``n x D`` matrix with one shape vector per row.
    """
    alpha = _positive(alpha, "alpha")
    rng = np.random.default_rng(seed)
    if alpha.ndim == 1:
        if count is None:
            raise DomainError("count is required for a single shape vector")
        g = rng.standard_gamma(np.broadcast_to(alpha, (int(count), alpha.size)))
    else:
        g = rng.standard_gamma(alpha)
    return g / g.sum(axis=1, keepdims=True)


def _alpha(beta, x):
    with np.errstate(over="ignore"):
        return np.exp(x @ beta.T)


def log_likelihood(beta, x, logv):
    """Dirichlet log-likelihood summed over observations.

    Parameters
    ----------
    beta : ndarray of shape (D, p)
    x : ndarray of shape (n, p)
    logv : ndarray of shape (n, D)
        Log of strictly positive compositions.
    """
    a = _alpha(beta, x)
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        return -np.inf
    return float(log_gamma(a.sum(axis=1)).sum() - log_gamma(a).sum()
                 + ((a - 1.0) * logv).sum())


def _scores(a, logv):
    return digamma(a.sum(axis=1))[:, None] - digamma(a) + logv


def log_likelihood_gradient(beta, x, logv):
    """Gradient with respect to ``beta``: ``sum_i alpha_id s_id x_ik``."""
    a = _alpha(beta, x)
    return (a * _scores(a, logv)).T @ x


def log_likelihood_hessian(beta, x, logv):
    """Analytic Hessian, ``(D*p) x (D*p)`` in row-major ``beta`` order.

    ``d2L / d beta_dk d beta_el = sum_i x_ik x_il [alpha_id alpha_ie
    trigamma(alpha_i+) - [d=e] (alpha_id^2 trigamma(alpha_id)
    - alpha_id s_id)]``.
    """
    a = _alpha(beta, x)
    n, D = a.shape
    p = x.shape[1]
    t_tot = trigamma(a.sum(axis=1))
    diag = a * _scores(a, logv) - a ** 2 * trigamma(a)
    xx = np.einsum("ik,il->ikl", x, x)
    h = np.einsum("id,ie,i,ikl->dkel", a, a, t_tot, xx)
    h[np.arange(D), :, np.arange(D), :] += np.einsum("id,ikl->dkl", diag, xx)
    return h.reshape(D * p, D * p)


def _numerical_hessian(grad, theta, rel_step=1e-5):
    k = theta.size
    h = np.empty((k, k))
    for j in range(k):
        step = rel_step * max(1.0, abs(theta[j]))
        e = np.zeros(k)
        e[j] = step
        h[:, j] = (grad(theta + e) - grad(theta - e)) / (2 * step)
    return 0.5 * (h + h.T)


@dataclass(frozen=True, eq=False)
class DirichletFit:
    """Maximum likelihood fit of a log-link Dirichlet regression.

    ``beta``, ``standard_errors``, ``wald_z`` and ``wald_p`` are ``D x p``
    with rows in part order and columns in design order. ``alpha_hat`` is
    ``n x D``. ``gradient_norm`` is measured on the mean log-likelihood in
    the internally rescaled parameters that the optimizer sees.
    """

    beta: np.ndarray
    alpha_hat: np.ndarray
    log_likelihood: float
    initial_log_likelihood: float
    standard_errors: np.ndarray
    covariance: np.ndarray
    wald_z: np.ndarray
    wald_p: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float
    part_names: tuple
    covariate_names: tuple
    message: str = ""

    @property
    def multiplicative(self):
        return np.exp(self.beta)

    def coefficient(self, part, covariate):
        return float(self.beta[self.part_names.index(part),
                               self.covariate_names.index(covariate)])


def _initial_beta(v, p):
    mean = v.mean(axis=0)
    var = v.var(axis=0, ddof=1) if v.shape[0] > 1 else np.zeros_like(mean)
    total_var = var.sum()
    if total_var > 0:
        precision = (mean * (1 - mean)).sum() / total_var - 1.0
    else:
        precision = 100.0
    precision = max(precision, 0.5)
    beta = np.zeros((v.shape[1], p))
    beta[:, 0] = np.log(mean * precision)
    return beta


def fit_dirichlet_regression(m, x, init=None, gradient_norm_tol=1e-8,
                             max_iterations=500):
    """Maximum likelihood Dirichlet regression.

    Parameters
    ----------
    m : CompositionMatrix
        Strictly positive compositions.
    x : DesignMatrix
        Row-aligned; the first column is the intercept.
    init : ndarray of shape (D, p), optional
        Starting coefficients. By default the intercepts come from
        matching a common-precision Dirichlet to the column means and
        pooled variances, and the other coefficients start at 0.

    Returns
    -------
    DirichletFit
        ``converged`` is False when the optimizer stopped early. The fit is
        returned all the same so that it can be inspected.

    Raises
    ------
    DomainError
        If any proportion is zero or the rows are misaligned.
    DegenerateDataError
        If a part is numerically zero in every sample.
    """
    if m.n != x.n:
        raise DomainError(f"{m.n} compositions but {x.n} design rows")
    v = m.values
    if not m.is_positive():
        raise DomainError("Dirichlet regression needs strictly positive "
                          "compositions; apply replace_zeros_knn first")
    tiny = np.flatnonzero(v.max(axis=0) < 1e-12)
    if tiny.size:
        raise DegenerateDataError(
            f"part {m.part_names[tiny[0]]!r} is numerically zero in every sample")
    logv = np.log(v)
    X = x.values
    n, p = X.shape
    D = v.shape[1]

    # rescale non-intercept columns for conditioning; undone after the fit
    scale = np.sqrt((X ** 2).mean(axis=0))
    scale[0] = 1.0
    scale[scale == 0] = 1.0
    Xs = X / scale

    beta0 = _initial_beta(v, p) if init is None else np.asarray(init, dtype=float)
    if beta0.shape != (D, p):
        raise DomainError(f"init must have shape {(D, p)}")
    theta0 = (beta0 * scale).ravel()

    def objective(theta):
        return -log_likelihood(theta.reshape(D, p), Xs, logv) / n

    def gradient(theta):
        return -log_likelihood_gradient(theta.reshape(D, p), Xs, logv).ravel() / n

    res = minimize(OptimizerProblem(objective, gradient, theta0,
                                    gradient_norm_tol, max_iterations))
    beta = res.solution.reshape(D, p) / scale
    ll = log_likelihood(beta, X, logv)
    ll0 = log_likelihood(beta0, X, logv)

    hess = _numerical_hessian(
        lambda t: log_likelihood_gradient(t.reshape(D, p), X, logv).ravel(),
        beta.ravel())
    try:
        cov = np.linalg.inv(-hess)
        diag = np.diag(cov)
        if np.any(diag <= 0):
            raise np.linalg.LinAlgError("information matrix not positive definite")
        se = np.sqrt(diag).reshape(D, p)
    except np.linalg.LinAlgError as exc:
        warnings.warn(f"standard errors unavailable: {exc}", RuntimeWarning,
                      stacklevel=2)
        cov = np.full((D * p, D * p), np.nan)
        se = np.full((D, p), np.nan)
    z = beta / se
    return DirichletFit(
        beta=beta,
        alpha_hat=_alpha(beta, X),
        log_likelihood=ll,
        initial_log_likelihood=ll0,
        standard_errors=se,
        covariance=cov,
        wald_z=z,
        wald_p=normal_two_sided_p(z),
        converged=res.converged,
        iterations=res.iterations,
        gradient_norm=res.gradient_norm,
        part_names=m.part_names,
        covariate_names=x.covariate_names,
        message=res.message,
    )


def _check_fit(fit, m):
    if fit.alpha_hat.shape != m.values.shape:
        raise DomainError("fit and compositions are not aligned")


def standardized_residuals(fit, m):
    """``(v_id - E[V_id]) / sd(V_id)`` under the fitted shape parameters."""
    _check_fit(fit, m)
    mean, var = dirichlet_marginal_moments(fit.alpha_hat)
    return (m.values - mean) / np.sqrt(var)


def composite_residuals(r):
    """Row sums of squared standardized residuals."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    return (r * r).sum(axis=1)


def score_residuals(fit, m):
    """``s_id = digamma(alpha_i+) - digamma(alpha_id) + log v_id``.

    ``alpha_i+`` is the total of observation ``i``'s shape parameters, so
    ``s_id`` is the derivative of observation ``i``'s log-density with
    respect to ``alpha_id``.
    """
    _check_fit(fit, m)
    if not m.is_positive():
        raise DomainError("score residuals need strictly positive compositions")
    return _scores(fit.alpha_hat, np.log(m.values))


def local_influence(fit, m):
    """Score residuals scaled by their observed information.

    ``rho_id = s_id / (trigamma(alpha_id) - trigamma(alpha_i+))``. The
    denominator is positive because trigamma is decreasing.
    """
    a = fit.alpha_hat
    s = score_residuals(fit, m)
    return s / (trigamma(a) - trigamma(a.sum(axis=1))[:, None])


def overdispersion_statistics(fit, m, x):
    """Overdispersion statistics, ``n x D x p``.

    ``delta_idk = alpha_id**2 * x_ik**2 * eta_id`` with
    ``eta_id = trigamma(alpha_i+) - trigamma(alpha_id) + s_id**2``.
    """
    a = fit.alpha_hat
    s = score_residuals(fit, m)
    eta = trigamma(a.sum(axis=1))[:, None] - trigamma(a) + s ** 2
    X = x.values
    if X.shape[0] != a.shape[0]:
        raise DomainError("design and fit are not aligned")
    return (a ** 2 * eta)[:, :, None] * (X ** 2)[:, None, :]


class Flag(NamedTuple):
    sample: str
    part: str
    reason: str
    value: float


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    standardized_residuals: np.ndarray
    composite_residuals: np.ndarray
    local_influence: np.ndarray
    score_residuals: np.ndarray
    overdispersion: np.ndarray
    flagged: list


def diagnose(fit, m, x, composite_threshold=40.0):
    """Residuals, influence and overdispersion for a fitted model.

    Flags the observation with the largest overdispersion statistic for
    every part and non-intercept covariate, the largest ``|rho|`` per
    part, and every observation whose composite residual exceeds
    ``composite_threshold``. No significance verdict is attached.
    """
    r = standardized_residuals(fit, m)
    c = composite_residuals(r)
    s = score_residuals(fit, m)
    rho = local_influence(fit, m)
    delta = overdispersion_statistics(fit, m, x)
    flags = []
    ids, parts, covs = m.sample_ids, m.part_names, x.covariate_names
    for d, part in enumerate(parts):
        i = int(np.argmax(np.abs(rho[:, d])))
        flags.append(Flag(ids[i], part, "max |local influence|", float(rho[i, d])))
        for k in range(1, len(covs)):
            i = int(np.argmax(delta[:, d, k]))
            flags.append(Flag(ids[i], part, f"max overdispersion ({covs[k]})",
                              float(delta[i, d, k])))
    for i in np.flatnonzero(c > composite_threshold):
        flags.append(Flag(ids[i], "", f"composite residual > {composite_threshold:g}",
                          float(c[i])))
    return DiagnosticsReport(r, c, rho, s, delta, flags)
