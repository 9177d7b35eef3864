"""Weighted log-ratio geometry.

Part weights ``w`` (summing to 1) enter through the weighted centered
log-ratios ``log v_d - sum_h w_h log v_h``. Variances here use the ``1/n``
convention so that the total variance equals the sum of squared singular
values of the weighted LRA. The regression module uses ``1/(n-1)``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from simplexreg.composition import CompositionMatrix
from simplexreg.errors import (
    DegenerateDataError,
    DomainError,
    GroupingError,
    LookupFailure,
    ParameterError,
)
from simplexreg.resampling import percentile_interval, run_replicates
from simplexreg.transforms import alr_basis, transform

__all__ = [
    "weighted_clr",
    "total_logratio_variance",
    "pairwise_logratio_variance",
    "procrustes_correlation",
    "rank_alr_denominators",
    "DenominatorScore",
    "LraResult",
    "weighted_lra",
    "DiscriminantResult",
    "discriminant_axis",
    "summated_logratio",
    "GroupMeanSummary",
    "group_mean_summary",
]


def weighted_clr(m):
    """Log-proportions centered on the weighted mean log-part of each row."""
    logv = m.log_values()
    return logv - (logv @ m.weights)[:, None]


def total_logratio_variance(m):
    """Weighted sum of the (1/n) variances of the weighted CLRs."""
    if m.n < 2:
        raise DegenerateDataError("variance needs at least 2 samples")
    clr = weighted_clr(m)
    return float(m.weights @ clr.var(axis=0))


def pairwise_logratio_variance(m):
    """Same total as :func:`total_logratio_variance`, from all pairwise log-ratios."""
    if m.n < 2:
        raise DegenerateDataError("variance needs at least 2 samples")
    logv = m.log_values()
    w = m.weights
    total = 0.0
    for d in range(m.D - 1):
        lr = logv[:, d + 1:] - logv[:, [d]]
        total += w[d] * float(w[d + 1:] @ lr.var(axis=0))
    return total


def _exact_configuration(m):
    """Row configuration whose Euclidean distances are the weighted logratio distances."""
    z = weighted_clr(m) * np.sqrt(m.weights)
    return z - z.mean(axis=0)


def _basis_configuration(m, basis):
    y = transform(m, basis)
    y = y - y.mean(axis=0)
    if basis.kind == "alr":
        names = basis.part_names
        w = m.weights[[m.part_index(p) for p in names]]
        ref = names.index(basis.denominator)
        others = [j for j in range(len(names)) if j != ref]
        y = y * np.sqrt(w[others] * w[ref])
    return y


def _procrustes_r(x, y):
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx <= 1e-300 or ny <= 1e-300:
        raise DegenerateDataError("configuration has zero variance")
    sv = np.linalg.svd((x / nx).T @ (y / ny), compute_uv=False)
    return float(np.clip(sv.sum(), 0.0, 1.0))


def procrustes_correlation(m, basis):
    """Procrustes correlation of a basis configuration with the exact geometry.

    Both ``n``-point configurations are column-centered and scaled to unit
    total sum of squares. After the best rotation and isotropic scaling the
    residual sum of squares is ``1 - r**2``, and ``r`` is returned. For ALR
    coordinates each log-ratio ``j/ref`` carries the weight
    ``w_j * w_ref``; other bases are used unweighted.

    Raises
    ------
    DegenerateDataError
        If either configuration has zero variance.
    """
    if tuple(sorted(basis.part_names)) != tuple(sorted(m.part_names)):
        raise LookupFailure("basis and composition parts differ")
    return _procrustes_r(_basis_configuration(m, basis), _exact_configuration(m))


class DenominatorScore(NamedTuple):
    part: str
    weight: float
    correlation: float


def rank_alr_denominators(m):
    """ALR denominators ranked by Procrustes correlation, highest first.

    Ties are broken by part order.
    """
    rows = []
    for j, part in enumerate(m.part_names):
        r = procrustes_correlation(m, alr_basis(m.part_names, part))
        rows.append((j, DenominatorScore(part, float(m.weights[j]), r)))
    rows.sort(key=lambda t: (-t[1].correlation, t[0]))
    return [row for _, row in rows]


@dataclass(frozen=True, eq=False)
class LraResult:
    """Weighted log-ratio analysis.

    Attributes
    ----------
    row_scores : ndarray of shape (n, r)
        Principal coordinates of the samples.
    column_loadings : ndarray of shape (D, r)
        Contribution coordinates of the parts.
    variance_explained : ndarray of shape (r,)
        Share of the total variance per dimension.
    total_variance : float
    singular_values : ndarray
        All non-trivial singular values, not just the first ``r``.
    weights : ndarray of shape (D,)
    """

    row_scores: np.ndarray
    column_loadings: np.ndarray
    variance_explained: np.ndarray
    total_variance: float
    singular_values: np.ndarray
    weights: np.ndarray

    @property
    def rank(self):
        return self.row_scores.shape[1]

    def column_standard(self):
        """Standard coordinates of the parts (loadings divided by sqrt weight)."""
        w = np.sqrt(self.weights)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(w[:, None] > 0, self.column_loadings / w[:, None], 0.0)

    def reconstruct(self):
        """Double-centered weighted CLR matrix implied by the retained dimensions."""
        return self.row_scores @ self.column_standard().T


def _lra_from_scaled(s, weights, rank):
    """SVD of ``s = sqrt(1/n) * centered_clr * sqrt(w)`` into an LraResult."""
    n = s.shape[0]
    u, sv, vt = np.linalg.svd(s, full_matrices=False)
    total = float(np.sum(sv ** 2))
    if total <= 0:
        raise DegenerateDataError("total log-ratio variance is zero")
    keep = min(n - 1, len(weights) - 1)
    sv = sv[:keep]
    rows = np.sqrt(n) * u[:, :rank] * sv[:rank]
    cols = vt[:rank].T
    # fix the sign so the largest |loading| of each axis is positive
    flip = np.sign(cols[np.argmax(np.abs(cols), axis=0), np.arange(rank)])
    flip[flip == 0] = 1.0
    return LraResult(rows * flip, cols * flip, sv[:rank] ** 2 / total, total, sv,
                     np.asarray(weights).copy())


def _check_rank(rank, m):
    max_rank = min(m.n - 1, m.D - 1)
    if rank is None:
        return max_rank
    if int(rank) != rank or rank < 1 or rank > max_rank:
        raise ParameterError(f"rank must be in 1..{max_rank}, got {rank!r}")
    return int(rank)


def weighted_lra(m, rank=None):
    """Weighted log-ratio analysis: weighted PCA of the CLR matrix.

    Rows have mass ``1/n`` and parts the weights of ``m``. The log
    matrix is double-centered (weighted row centering, then column
    centering) and scaled by the square roots of the masses before the SVD.

    Parameters
    ----------
    m : CompositionMatrix
        Strictly positive.
    rank : int, optional
        Dimensions to retain; defaults to ``min(n - 1, D - 1)``.
    """
    rank = _check_rank(rank, m)
    s = _exact_configuration(m) / np.sqrt(m.n)
    return _lra_from_scaled(s, m.weights, rank)


@dataclass(frozen=True, eq=False)
class DiscriminantResult:
    """Group-difference axis and the LRA of what remains orthogonal to it.

    ``axis`` holds CLR-scale coefficients with ``sum_d w_d axis_d = 0`` and
    ``sum_d w_d axis_d**2 = 1``. ``scores`` are the weighted projections of
    the centered CLR rows. ``groups`` is ``(reference, other)``; the axis
    points from the reference mean to the other mean.
    """

    axis: np.ndarray
    scores: np.ndarray
    residual_lra: LraResult
    groups: tuple
    group_mean_scores: tuple


def _two_groups(groups, n, order=None):
    g = np.asarray(groups)
    if g.shape != (n,):
        raise GroupingError(f"expected {n} group labels, got shape {g.shape}")
    levels = list(order) if order is not None else sorted(set(g.tolist()))
    if len(levels) != 2:
        raise GroupingError(f"need exactly two groups, got {len(set(g.tolist()))}")
    masks = [g == lev for lev in levels]
    if not masks[0].any() or not masks[1].any():
        raise GroupingError("both groups must be non-empty")
    if not (masks[0] | masks[1]).all():
        raise GroupingError("labels outside the two declared groups")
    return levels, masks


def discriminant_axis(m, groups, order=None, rank=None):
    """Axis through the two weighted group means, plus the residual LRA.

    Parameters
    ----------
    m : CompositionMatrix
    groups : array_like of length n
        Two distinct labels.
    order : pair, optional
        ``(reference, other)``; defaults to sorted label order.
    rank : int, optional
        Dimensions kept in ``residual_lra``.

    Raises
    ------
    GroupingError
        Fewer than two non-empty groups.
    DegenerateDataError
        The group means coincide, so the direction is undefined.
    """
    levels, (g0, g1) = _two_groups(groups, m.n, order)
    z = _exact_configuration(m)
    delta = z[g1].mean(axis=0) - z[g0].mean(axis=0)
    size = np.linalg.norm(delta)
    scale = np.linalg.norm(z) / np.sqrt(m.n)
    if size <= 1e-12 * max(scale, 1e-300):
        raise DegenerateDataError("group means coincide; axis undefined")
    u = delta / size
    root_w = np.sqrt(m.weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        axis = np.where(root_w > 0, u / root_w, 0.0)
    scores = z @ u
    residual = z - np.outer(scores, u)
    max_rank = min(m.n - 1, m.D - 2)
    if max_rank < 1:
        raise ParameterError("no residual dimensions left for D = 2")
    rank = max_rank if rank is None else min(int(rank), max_rank)
    res_lra = _lra_from_scaled(residual / np.sqrt(m.n), m.weights, rank)
    return DiscriminantResult(axis, scores, res_lra, tuple(levels),
                              (float(scores[g0].mean()), float(scores[g1].mean())))


def _part_indices(m, parts):
    if isinstance(parts, str):
        parts = [parts]
    return [m.part_index(p) for p in parts]


def summated_logratio(m, numerator, denominator):
    """``log(sum of numerator parts / sum of denominator parts)`` per row."""
    num = _part_indices(m, numerator)
    den = _part_indices(m, denominator)
    if not num or not den:
        raise ParameterError("numerator and denominator must be non-empty")
    if set(num) & set(den):
        raise ParameterError("numerator and denominator parts overlap")
    top = m.values[:, num].sum(axis=1)
    bottom = m.values[:, den].sum(axis=1)
    if np.any(top <= 0) or np.any(bottom <= 0):
        raise DomainError("an amalgamation is zero in some sample")
    return np.log(top) - np.log(bottom)


@dataclass(frozen=True)
class GroupMeanSummary:
    """Group means of one variable with bootstrap intervals and a t-test.

    ``ci50`` and ``ci95`` hold one ``(lower, upper)`` pair per group.
    """

    groups: tuple
    means: tuple
    ci50: tuple
    ci95: tuple
    p_value: float
    t_statistic: float
    replicates: int


def group_mean_summary(values, groups, order=None, replicates=10000, seed=0,
                       workers=1):
    """Means of two groups with percentile-bootstrap 50% and 95% intervals.

    Each group is resampled separately, with replacement, within each
    replicate. The p-value is from the two-sided Welch two-sample t-test.

    Raises
    ------
    GroupingError
        A group has fewer than 2 observations.
    DegenerateDataError
        Both groups are constant, so the test statistic is undefined.
    """
    x = np.asarray(values, dtype=float).ravel()
    levels, masks = _two_groups(groups, x.size, order)
    parts = [x[mk] for mk in masks]
    for lev, p in zip(levels, parts):
        if p.size < 2:
            raise GroupingError(f"group {lev!r} has fewer than 2 observations")
    if all(np.ptp(p) == 0 for p in parts):
        raise DegenerateDataError("both groups are constant; test undefined")

    def one(rng):
        return np.array([rng.choice(p, size=p.size, replace=True).mean()
                         for p in parts])

    boot = np.array(run_replicates(one, replicates, seed, "group_mean", workers))
    lo50, hi50 = percentile_interval(boot, 0.50)
    lo95, hi95 = percentile_interval(boot, 0.95)
    t, p = stats.ttest_ind(parts[1], parts[0], equal_var=False)
    return GroupMeanSummary(
        groups=tuple(levels),
        means=tuple(float(p.mean()) for p in parts),
        ci50=tuple((float(lo50[g]), float(hi50[g])) for g in range(2)),
        ci95=tuple((float(lo95[g]), float(hi95[g])) for g in range(2)),
        p_value=float(p),
        t_statistic=float(t),
        replicates=int(replicates),
    )
