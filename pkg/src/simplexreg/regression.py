"""Multivariate least squares on log-ratio coordinates.

Each coordinate of a log-ratio basis is regressed on the same design. The
coefficient table can be mapped back to log-contrasts on the parts, which
do not depend on the basis used. Residual variances use ``1/(n - p)``.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np
from scipy import linalg

from simplexreg.errors import (
    CollinearityError,
    DegenerateDataError,
    DomainError,
    ParameterError,
)
from simplexreg.numerics import f_sf
from simplexreg.resampling import (
    percentile_interval,
    percentile_p_value,
    run_replicates,
)
from simplexreg.transforms import orthonormal_basis, transform

__all__ = [
    "DesignMatrix",
    "design_matrix",
    "LogRatioRegressionFit",
    "fit_logratio_regression",
    "to_log_contrast",
    "BootstrapResult",
    "bootstrap_coefficients",
    "ManovaRow",
    "manova_pillai",
]

INTERCEPT = "(Intercept)"


def _dependent_columns(values, tol=None):
    """Indices of columns that are combinations of earlier columns."""
    dependent = []
    kept = []
    for j in range(values.shape[1]):
        trial = values[:, kept + [j]]
        if np.linalg.matrix_rank(trial, tol=tol) < len(kept) + 1:
            dependent.append(j)
        else:
            kept.append(j)
    return dependent


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Regression design with an intercept in the first column.

    Attributes
    ----------
    values : ndarray of shape (n, p)
    covariate_names : tuple of str
        Column labels, e.g. ``("(Intercept)", "race[AA]", "age")``.
    terms : dict
        Term name -> tuple of column indices. A categorical covariate with
        several levels forms one term.
    encodings : dict
        Categorical covariate -> {level: dummy code}. The reference level
        maps to 0.
    """

    values: np.ndarray
    covariate_names: tuple
    terms: dict = field(default_factory=dict)
    encodings: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.array(self.values, dtype=float)
        if x.ndim != 2:
            raise DomainError("design must be 2-d")
        n, p = x.shape
        if len(self.covariate_names) != p:
            raise DomainError(f"{len(self.covariate_names)} names for {p} columns")
        if not np.all(np.isfinite(x)):
            raise DomainError("design contains non-finite values")
        if not np.allclose(x[:, 0], 1.0):
            raise DomainError("first design column must be the intercept")
        if n <= p:
            raise DomainError(f"need more samples than columns (n={n}, p={p})")
        dep = _dependent_columns(x)
        if dep:
            names = [self.covariate_names[j] for j in dep]
            raise CollinearityError(f"design is rank deficient; dependent columns: {names}",
                                    dependent=names)
        x.setflags(write=False)
        object.__setattr__(self, "values", x)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        terms = dict(self.terms) or {name: (j,) for j, name in enumerate(self.covariate_names)}
        object.__setattr__(self, "terms", terms)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def take(self, rows):
        return DesignMatrix(self.values[rows], self.covariate_names, self.terms,
                            self.encodings)


def design_matrix(covariates, categorical=None):
    """Build a :class:`DesignMatrix` from named columns.

    Parameters
    ----------
    covariates : mapping of str to array_like
        Column name -> values, in the order the terms should appear.
    categorical : mapping of str to reference level, optional
        Columns to dummy-code. Every non-reference level gets a 0/1 column
        named ``"name[level]"``. Levels are sorted.

    Examples
    --------
    >>> d = design_matrix({"race": ["EA", "AA", "EA", "AA"], "age": [50, 61, 70, 44]},
    ...                   categorical={"race": "EA"})
    >>> d.covariate_names
    ('(Intercept)', 'race[AA]', 'age')
    """
    categorical = dict(categorical or {})
    cols = []
    names = [INTERCEPT]
    terms = {INTERCEPT: (0,)}
    encodings = {}
    n = None
    for name, raw in covariates.items():
        raw = np.asarray(raw)
        if n is None:
            n = raw.shape[0]
        elif raw.shape[0] != n:
            raise DomainError(f"column {name!r} has {raw.shape[0]} rows, expected {n}")
        if name in categorical:
            ref = categorical[name]
            levels = sorted(set(raw.tolist()), key=str)
            if ref not in levels:
                raise ParameterError(f"reference level {ref!r} not present in {name!r}")
            others = [lev for lev in levels if lev != ref]
            encodings[name] = {ref: 0, **{lev: k + 1 for k, lev in enumerate(others)}}
            idx = []
            for lev in others:
                cols.append((raw == lev).astype(float))
                names.append(f"{name}[{lev}]")
                idx.append(len(names) - 1)
            terms[name] = tuple(idx)
        else:
            cols.append(raw.astype(float))
            names.append(name)
            terms[name] = (len(names) - 1,)
    if n is None:
        raise ParameterError("at least one covariate is required")
    values = np.column_stack([np.ones(n)] + cols)
    return DesignMatrix(values, tuple(names), terms, encodings)


def _ols(x, y):
    """Least squares via QR. Returns (coefficients p x m, residuals n x m)."""
    q, r = np.linalg.qr(x)
    b = linalg.solve_triangular(r, q.T @ y)
    return b, y - x @ b


@dataclass(frozen=True, eq=False)
class LogRatioRegressionFit:
    """Per-coordinate least-squares fit of log-ratios on a design.

    Attributes
    ----------
    basis : LogRatioBasis
    design : DesignMatrix
    coefficients : ndarray of shape (m, p)
        Row per log-ratio coordinate, column per design column.
    standard_errors : ndarray of shape (m, p)
    residuals : ndarray of shape (n, m)
    log_contrast : ndarray of shape (p, D)
        Zero-sum rows; see :func:`to_log_contrast`.
    manova : list of ManovaRow or None
        Filled for complete bases when ``n > p + D - 1``.
    bootstrap : BootstrapResult or None
    """

    basis: object
    design: DesignMatrix
    coefficients: np.ndarray
    standard_errors: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    log_contrast: np.ndarray
    manova: list = None
    bootstrap: object = None

    @property
    def multiplicative(self):
        """``exp`` of the coefficients: effects on the ratios themselves."""
        return np.exp(self.coefficients)

    @property
    def multiplicative_log_contrast(self):
        return np.exp(self.log_contrast)

    def coefficient(self, coordinate, covariate):
        i = self.basis.coordinate_names.index(coordinate)
        j = self.design.covariate_names.index(covariate)
        return float(self.coefficients[i, j])


def _check_aligned(m, x):
    if m.n != x.n:
        raise DomainError(f"{m.n} compositions but {x.n} design rows")


def fit_logratio_regression(m, basis, x, with_manova=True):
    """Regress every log-ratio coordinate on the design.

    Parameters
    ----------
    m : CompositionMatrix
        Strictly positive.
    basis : LogRatioBasis
    x : DesignMatrix
        Row-aligned with ``m``.
    with_manova : bool, default True
        Attach Pillai tests per term when the basis is complete.

    Returns
    -------
    LogRatioRegressionFit
    """
    _check_aligned(m, x)
    y = transform(m, basis)
    b, resid = _ols(x.values, y)
    dof = x.n - x.p
    sigma2 = (resid ** 2).sum(axis=0) / dof
    xtx_inv = np.linalg.inv(x.values.T @ x.values)
    se = np.sqrt(np.outer(sigma2, np.diag(xtx_inv)))
    phi = _phi(b.T, basis) if basis.is_complete() else None
    fit = LogRatioRegressionFit(basis, x, b.T, se, resid, y - resid, phi)
    if with_manova and basis.is_complete() and x.n > x.p + basis.D - 1:
        try:
            object.__setattr__(fit, "manova", manova_pillai(m, basis, x))
        except DegenerateDataError:
            pass  # e.g. a constant response; the coefficients are still valid
    return fit


def _phi(coefficients, basis):
    # the zero-sum phi with Q phi = b is pinv(Q) b
    return coefficients.T @ basis.pinv.T


def to_log_contrast(fit):
    """Log-contrast coefficients, one zero-sum row per design column.

    For each design column with coefficient vector ``b`` over the
    coordinates, ``phi`` is the zero-sum vector on the parts with
    ``Q phi = b``, namely ``pinv(Q) b``. For CLR this is ``b`` itself and
    for ILR it is ``Q.T b``. Every complete basis gives the same ``phi``.
    ``exp(phi)`` are multiplicative effects on the parts.

    Raises
    ------
    ParameterError
        If the basis does not span all ``D - 1`` log-ratio directions.
    """
    if not fit.basis.is_complete():
        raise ParameterError("log-contrast needs a complete log-ratio basis")
    return _phi(fit.coefficients, fit.basis)


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    """Case-resampling bootstrap of coefficients and log-contrasts.

    ``coef_*`` arrays are ``(m, p)``, ``phi_*`` arrays are ``(p, D)``.
    Bounds are on the log scale; exponentiate for multiplicative effects.
    """

    level: float
    replicates: int
    discarded: int
    coef_lower: np.ndarray
    coef_upper: np.ndarray
    coef_p: np.ndarray
    phi_lower: np.ndarray
    phi_upper: np.ndarray
    phi_p: np.ndarray
    warning: str = None

    @property
    def used(self):
        return self.replicates - self.discarded


def bootstrap_coefficients(m, basis, x, replicates=10000, seed=None, level=0.95,
                           workers=1):
    """Percentile bootstrap intervals by resampling samples with replacement.

    Rows of ``m`` and ``x`` are resampled jointly. A replicate whose
    design is rank deficient is discarded; more than 5% discards adds a
    warning to the result. The p-values come from inverting the percentile
    intervals (see :func:`simplexreg.resampling.percentile_p_value`).

    Parameters
    ----------
    replicates : int, default 10000
        At least 100.
    seed : int
        Required.
    workers : int, default 1
        Threads; the result does not depend on it.
    """
    _check_aligned(m, x)
    if replicates < 100:
        raise ParameterError("at least 100 bootstrap replicates required")
    if seed is None:
        raise ParameterError("bootstrap requires a seed")
    y = transform(m, basis)
    xv = x.values
    n, p = xv.shape
    complete = basis.is_complete()

    def one(rng):
        idx = rng.integers(0, n, size=n)
        xb = xv[idx]
        if np.linalg.matrix_rank(xb) < p:
            return None
        b, _ = _ols(xb, y[idx])
        return b.T

    draws = run_replicates(one, replicates, seed, "bootstrap", workers)
    kept = [d for d in draws if d is not None]
    discarded = len(draws) - len(kept)
    if len(kept) < 2:
        raise DegenerateDataError("almost every bootstrap resample was rank deficient")
    coefs = np.stack(kept)
    phis = np.stack([_phi(c, basis) for c in coefs]) if complete else None

    note = None
    if discarded > 0.05 * replicates:
        note = (f"{discarded} of {replicates} resamples discarded "
                "for rank-deficient designs")
        warnings.warn(note, RuntimeWarning, stacklevel=2)

    clo, chi = percentile_interval(coefs, level)
    cp = percentile_p_value(coefs)
    if complete:
        plo, phi_hi = percentile_interval(phis, level)
        pp = percentile_p_value(phis)
    else:
        plo = phi_hi = pp = None
    return BootstrapResult(level, int(replicates), discarded, clo, chi, cp,
                           plo, phi_hi, pp, note)


@dataclass(frozen=True)
class ManovaRow:
    term: str
    pillai: float
    df1: float
    df2: float
    approx_f: float
    p_value: float


def manova_pillai(m, basis, x, terms=None):
    """Pillai's trace for each design term with its F approximation.

    For a term with ``q`` design columns, ``H`` is the hypothesis SSCP
    matrix of that term adjusted for all other columns and ``E`` the
    residual SSCP matrix. Pillai's trace is ``tr[H (H + E)^-1]``. With
    ``s = min(m, q)``, ``a = (|m - q| - 1)/2`` and
    ``b = (n - p - m - 1)/2``, the statistic
    ``F = (2b + s + 1)/(2a + s + 1) * V/(s - V)`` is referred to
    ``F(s(2a + s + 1), s(2b + s + 1))``. For ``q = 1`` the degrees of
    freedom are ``(m, n - p - m + 1)``.

    CLR coordinates have a singular covariance matrix. A basis that is not
    of full row rank is therefore replaced by the default orthonormal
    basis of the same parts. Pillai's trace is invariant to that change.

    Parameters
    ----------
    terms : sequence of str, optional
        Defaults to every non-intercept term of the design.

    Raises
    ------
    DegenerateDataError
        If the residual SSCP matrix is singular.
    """
    _check_aligned(m, x)
    if np.linalg.matrix_rank(basis.q_matrix) < basis.m:
        basis = orthonormal_basis(basis.part_names)
    y = transform(m, basis)
    n, p = x.values.shape
    k = y.shape[1]
    if n <= p + k:
        raise DegenerateDataError(f"need n > p + m (n={n}, p={p}, m={k})")
    b, resid = _ols(x.values, y)
    E = resid.T @ resid
    if np.linalg.cond(E) > 1e12:
        raise DegenerateDataError("residual SSCP matrix is singular")
    xtx_inv = np.linalg.inv(x.values.T @ x.values)
    if terms is None:
        terms = [t for t in x.terms if t != INTERCEPT]
    rows = []
    for term in terms:
        cols = list(x.terms[term])
        q = len(cols)
        lb = b[cols]
        mid = np.linalg.inv(xtx_inv[np.ix_(cols, cols)])
        H = lb.T @ mid @ lb
        V = float(np.clip(np.trace(np.linalg.solve(H + E, H).T), 0.0, min(k, q)))
        s = min(k, q)
        a = (abs(k - q) - 1) / 2.0
        bb = (n - p - k - 1) / 2.0
        df1 = s * (2 * a + s + 1)
        df2 = s * (2 * bb + s + 1)
        F = (2 * bb + s + 1) / (2 * a + s + 1) * V / (s - V) if V < s else np.inf
        rows.append(ManovaRow(term, V, df1, df2, F, f_sf(F, df1, df2)))
    return rows
