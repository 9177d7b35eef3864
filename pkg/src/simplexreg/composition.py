"""Compositions on the simplex: closure, part weights and zero replacement.

A :class:`CompositionMatrix` holds ``n`` samples of a ``D``-part
composition, one per row, together with part labels, sample labels and the
part weights used by the weighted log-ratio geometry.
"""

from dataclasses import dataclass, field

import numpy as np

from simplexreg.errors import (
    DegenerateDataError,
    DomainError,
    LookupFailure,
    ParameterError,
)

__all__ = [
    "CompositionMatrix",
    "close",
    "geometric_mean",
    "replace_zeros_knn",
    "subcomposition",
    "part_weights",
]

_ROW_SUM_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def part_weights(values, mode="average"):
    """Part weights for a closed ``n x D`` matrix.

    Parameters
    ----------
    values : ndarray
        Closed compositions.
    mode : {"average", "uniform"} or array_like
        ``"average"`` gives the column means, so abundant parts weigh
        more. ``"uniform"`` gives ``1/D`` each. An explicit non-negative
        vector is normalized to unit sum.
    """
    values = np.asarray(values, dtype=float)
    D = values.shape[1]
    if isinstance(mode, str):
        if mode == "average":
            return values.mean(axis=0)
        if mode == "uniform":
            return np.full(D, 1.0 / D)
        raise ParameterError(f"unknown weights mode {mode!r}")
    w = np.asarray(mode, dtype=float).ravel()
    if w.size != D:
        raise ParameterError(f"expected {D} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
        raise ParameterError("weights must be finite, non-negative, not all zero")
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class CompositionMatrix:
    """Closed compositions with labels and part weights.

    Construct through :func:`close` unless the rows are already closed.
    The arrays are stored read-only.

    Attributes
    ----------
    values : ndarray of shape (n, D)
        Proportions; each row sums to 1.
    part_names : tuple of str
    sample_ids : tuple of str
    weights : ndarray of shape (D,)
        Non-negative, summing to 1. Defaults to the column means.
    """

    values: np.ndarray
    part_names: tuple = None
    sample_ids: tuple = None
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise DomainError("composition values must be a 2-d array")
        n, D = v.shape
        if D < 2 or n < 1:
            raise DomainError(f"need n >= 1 rows and D >= 2 parts, got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("compositions must be finite and non-negative")
        sums = v.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > _ROW_SUM_TOL)
        if bad.size:
            raise DomainError(
                f"row {bad[0]} sums to {sums[bad[0]]!r}; use close() first")

        names = self.part_names
        names = tuple(f"part{j + 1}" for j in range(D)) if names is None else tuple(map(str, names))
        if len(names) != D:
            raise DomainError(f"{len(names)} part names for {D} parts")
        if len(set(names)) != D:
            raise DomainError("part names must be unique")
        ids = self.sample_ids
        ids = tuple(str(i) for i in range(n)) if ids is None else tuple(map(str, ids))
        if len(ids) != n:
            raise DomainError(f"{len(ids)} sample ids for {n} rows")

        w = part_weights(v, "average" if self.weights is None else self.weights)
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "part_names", names)
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def D(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def is_positive(self):
        return bool(np.all(self.values > 0))

    def zero_counts(self):
        """Number of zero entries per part."""
        return (self.values == 0).sum(axis=0)

    def part_index(self, label):
        try:
            return self.part_names.index(str(label))
        except ValueError:
            raise LookupFailure(f"unknown part {label!r}") from None

    def log_values(self):
        """Natural log of the values; requires strictly positive entries."""
        if not self.is_positive():
            raise DomainError(
                "zero proportions present; apply replace_zeros_knn first")
        return np.log(self.values)

    def with_weights(self, weights):
        """Copy with weights replaced (mode string or explicit vector)."""
        return CompositionMatrix(self.values, self.part_names, self.sample_ids,
                                 part_weights(self.values, weights))

    def take(self, rows):
        """Row subset; weights are kept, not recomputed."""
        rows = np.asarray(rows)
        ids = np.asarray(self.sample_ids, dtype=object)[rows]
        return CompositionMatrix(self.values[rows], self.part_names, tuple(ids),
                                 self.weights)


def close(raw, part_names=None, sample_ids=None, weights="average"):
    """Divide each row by its sum.

    Rows that already sum to 1 within 1e-12 are returned unchanged.

    Parameters
    ----------
    raw : array_like of shape (n, D)
        Non-negative amounts. A 1-d input is treated as a single row.
    part_names, sample_ids : sequence of str, optional
    weights : {"average", "uniform"} or array_like
        See :func:`part_weights`.

    Returns
    -------
    CompositionMatrix

    Raises
    ------
    DomainError
        If any entry is negative or not finite.
    DegenerateDataError
        If a row sums to zero.

    Examples
    --------
    >>> close([[1, 1, 2]]).values
    array([[0.25, 0.25, 0.5 ]])
    """
    a = np.atleast_2d(np.asarray(raw, dtype=float))
    if a.ndim != 2:
        raise DomainError("raw matrix must be at most 2-d")
    if not np.all(np.isfinite(a)):
        raise DomainError("raw matrix contains non-finite entries")
    if np.any(a < 0):
        raise DomainError("raw matrix contains negative entries")
    sums = a.sum(axis=1, keepdims=True)
    zero_rows = np.flatnonzero(sums.ravel() == 0)
    if zero_rows.size:
        i = zero_rows[0]
        label = sample_ids[i] if sample_ids is not None else i
        raise DegenerateDataError(f"sample {label!r} has all parts zero")
    closed = a / sums
    # a second pass removes the last-ulp drift left by the first division
    closed = closed / closed.sum(axis=1, keepdims=True)
    # rows that are already closed are kept bit for bit, so that compositions
    # written to disk and read back are unchanged
    done = np.abs(sums.ravel() - 1.0) <= _ROW_SUM_TOL
    closed[done] = a[done]
    return CompositionMatrix(closed, part_names, sample_ids,
                             part_weights(closed, weights))


def geometric_mean(v):
    """Geometric mean of a positive vector, computed in log space."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise DomainError("geometric mean requires finite positive entries")
    return float(np.exp(np.mean(np.log(v))))


def subcomposition(m, parts):
    """Select ``parts`` and re-close each row.

    Weights are restricted to the selected parts and re-normalized.
    """
    parts = list(parts)
    if len(parts) < 2:
        raise ParameterError("a subcomposition needs at least 2 parts")
    if len(set(parts)) != len(parts):
        raise ParameterError("duplicate parts in subcomposition")
    idx = [m.part_index(p) for p in parts]
    w = m.weights[idx]
    if w.sum() <= 0:
        raise DegenerateDataError("selected parts all have zero weight")
    return close(m.values[:, idx], [m.part_names[i] for i in idx], m.sample_ids,
                 weights=w)


def _knn_row_geometry(logv, pos, i):
    """CLR distances and geometric-mean scale factors from row ``i`` to all rows.

    Only parts positive in both rows enter. Rows sharing no positive part
    get an infinite distance.
    """
    shared = pos & pos[i]
    counts = shared.sum(axis=1)
    li = np.where(shared, logv[i], 0.0)
    lr = np.where(shared, logv, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_i = li.sum(axis=1) / counts
        mean_r = lr.sum(axis=1) / counts
    diff = np.where(shared, (li - mean_i[:, None]) - (lr - mean_r[:, None]), 0.0)
    dist = np.sqrt((diff * diff).sum(axis=1))
    dist[counts == 0] = np.inf
    scale = np.exp(mean_i - mean_r)
    return dist, scale


def replace_zeros_knn(m, k=5):
    """Replace zero proportions using the k nearest donor rows.

    For each zero in row ``i`` and part ``j``, donors are the rows with a
    positive value in part ``j``. The distance from ``i`` to a donor is the
    Euclidean distance between their CLR coordinates computed on the parts
    that are positive in both rows. The imputed value is the median, over
    the ``k`` nearest donors, of the donor's part-``j`` proportion
    multiplied by the ratio of the recipient's to the donor's geometric
    mean on the shared parts. The non-zero parts of the row are then
    shrunk by a common factor so the row sums to 1, which leaves their
    mutual ratios unchanged.

    Parameters
    ----------
    m : CompositionMatrix
    k : int, default 5

    Returns
    -------
    CompositionMatrix
        Strictly positive; labels and weights carried over from ``m``.

    Raises
    ------
    DegenerateDataError
        If a part is zero in every row.
    ParameterError
        If ``k < 1`` or fewer than ``k`` donors exist for some zero.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    V = np.array(m.values)
    pos = V > 0
    if pos.all():
        return m
    empty = np.flatnonzero(~pos.any(axis=0))
    if empty.size:
        raise DegenerateDataError(
            f"part {m.part_names[empty[0]]!r} is zero in every sample; "
            "it cannot be imputed")

    with np.errstate(divide="ignore"):
        logv = np.where(pos, np.log(np.where(pos, V, 1.0)), 0.0)

    out = V.copy()
    for i in np.flatnonzero(~pos.all(axis=1)):
        dist, scale = _knn_row_geometry(logv, pos, i)
        dist[i] = np.inf
        zeros = np.flatnonzero(~pos[i])
        imputed = np.empty(zeros.size)
        for t, j in enumerate(zeros):
            cand = np.flatnonzero(pos[:, j] & np.isfinite(dist))
            if cand.size < k:
                raise ParameterError(
                    f"only {cand.size} donors available for part "
                    f"{m.part_names[j]!r} in sample {m.sample_ids[i]!r}; k={k}")
            order = cand[np.lexsort((cand, dist[cand]))][:k]
            imputed[t] = np.median(V[order, j] * scale[order])
        total = imputed.sum()
        row = V[i].copy()
        row[zeros] = imputed
        if total < 1.0:
            row[pos[i]] *= 1.0 - total
        row /= row.sum()
        out[i] = row
    return CompositionMatrix(out, m.part_names, m.sample_ids, m.weights)
