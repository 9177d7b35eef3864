"""ALR, CLR and ILR transformations written as zero-sum contrast matrices.

Every transformation maps a row of log-proportions ``log(v)`` to
``log(v) @ Q.T``. Each row of ``Q`` sums to zero, so coordinates do not
depend on the scale of ``v``.
"""

from dataclasses import dataclass, field

import numpy as np

from simplexreg.composition import CompositionMatrix, close
from simplexreg.errors import DomainError, LookupFailure, ParameterError

__all__ = [
    "LogRatioBasis",
    "alr_basis",
    "clr_basis",
    "ilr_basis",
    "transform",
    "inverse_transform",
    "orthonormal_basis",
]

_ZERO_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LogRatioBasis:
    """A log-ratio transformation.

    Attributes
    ----------
    kind : {"alr", "clr", "ilr"}
    q_matrix : ndarray of shape (m, D)
        Zero-sum rows; ``m = D - 1`` for ALR and ILR, ``D`` for CLR.
    part_names : tuple of str
    coordinate_names : tuple of str
    denominator : str or None
        ALR reference part.
    """

    kind: str
    q_matrix: np.ndarray
    part_names: tuple
    coordinate_names: tuple
    denominator: str = None
    _pinv: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        q = np.array(self.q_matrix, dtype=float)
        if q.ndim != 2 or q.shape[1] != len(self.part_names):
            raise ParameterError("q_matrix must have one column per part")
        if np.max(np.abs(q.sum(axis=1))) > _ZERO_SUM_TOL:
            raise ParameterError("q_matrix rows must sum to zero")
        if len(self.coordinate_names) != q.shape[0]:
            raise ParameterError("one coordinate name per q_matrix row required")
        q.setflags(write=False)
        pinv = np.linalg.pinv(q)
        pinv.setflags(write=False)
        object.__setattr__(self, "q_matrix", q)
        object.__setattr__(self, "part_names", tuple(self.part_names))
        object.__setattr__(self, "coordinate_names", tuple(self.coordinate_names))
        object.__setattr__(self, "_pinv", pinv)

    @property
    def D(self):
        return len(self.part_names)

    @property
    def m(self):
        return self.q_matrix.shape[0]

    @property
    def pinv(self):
        """Moore-Penrose inverse of ``q_matrix`` (``D x m``)."""
        return self._pinv

    def is_complete(self):
        """True when the coordinates determine the composition (rank D - 1)."""
        return np.linalg.matrix_rank(self.q_matrix) == self.D - 1


def _check_parts(parts):
    parts = tuple(map(str, parts))
    if len(parts) < 2:
        raise ParameterError("need at least 2 parts")
    if len(set(parts)) != len(parts):
        raise ParameterError("part names must be unique")
    return parts


def alr_basis(parts, denominator=None):
    """Additive log-ratios against a fixed reference part.

    ``denominator`` defaults to the last part. Coordinate ``j`` is
    ``log(v_j / v_denominator)`` for every other part, in part order, and
    is named ``"part_j/denominator"``.
    """
    parts = _check_parts(parts)
    if denominator is None:
        denominator = parts[-1]
    denominator = str(denominator)
    if denominator not in parts:
        raise LookupFailure(f"unknown denominator part {denominator!r}")
    ref = parts.index(denominator)
    D = len(parts)
    others = [j for j in range(D) if j != ref]
    q = np.zeros((D - 1, D))
    q[np.arange(D - 1), others] = 1.0
    q[:, ref] = -1.0
    names = tuple(f"{parts[j]}/{denominator}" for j in others)
    return LogRatioBasis("alr", q, parts, names, denominator=denominator)


def clr_basis(parts):
    """Centered log-ratios: each log-part minus the mean log-part."""
    parts = _check_parts(parts)
    D = len(parts)
    q = np.eye(D) - 1.0 / D
    return LogRatioBasis("clr", q, parts, tuple(f"clr({p})" for p in parts))


def _pivot_matrix(order_idx, D):
    q = np.zeros((D - 1, D))
    for j in range(D - 1):
        rest = D - j - 1
        c = np.sqrt(rest / (rest + 1.0))
        q[j, order_idx[j]] = c
        q[j, order_idx[j + 1:]] = -c / rest
    return q


def _tree_leaves(node):
    if isinstance(node, (list, tuple)):
        if len(node) != 2:
            raise ParameterError("contrast tree nodes must have exactly 2 children")
        return _tree_leaves(node[0]) + _tree_leaves(node[1])
    return [str(node)]


def _tree_rows(node, index, D, rows):
    if not isinstance(node, (list, tuple)):
        return
    left, right = _tree_leaves(node[0]), _tree_leaves(node[1])
    r, s = len(left), len(right)
    c = np.sqrt(r * s / (r + s))
    row = np.zeros(D)
    row[[index[p] for p in left]] = c / r
    row[[index[p] for p in right]] = -c / s
    rows.append(row)
    _tree_rows(node[0], index, D, rows)
    _tree_rows(node[1], index, D, rows)


def _sign_rows(signs, D):
    signs = np.asarray(signs)
    if signs.shape != (D - 1, D) or not np.isin(signs, (-1, 0, 1)).all():
        raise ParameterError("sign partition must be a (D-1) x D matrix of -1/0/1")
    rows = []
    for srow in signs:
        r, s = (srow == 1).sum(), (srow == -1).sum()
        if r == 0 or s == 0:
            raise ParameterError("each partition row needs parts on both sides")
        c = np.sqrt(r * s / (r + s))
        rows.append(np.where(srow == 1, c / r, np.where(srow == -1, -c / s, 0.0)))
    return np.array(rows)


def ilr_basis(parts, spec=None):
    """Isometric log-ratios.

    Parameters
    ----------
    parts : sequence of str
    spec : None, sequence of str, nested 2-tuples, or ndarray
        ``None`` gives pivot coordinates in the given part order. A flat
        permutation of ``parts`` gives pivot coordinates in that order:
        coordinate ``j`` contrasts the ``j``-th part with the geometric
        mean of the parts after it, scaled by ``sqrt((D-j)/(D-j+1))``.
        A nested tuple such as ``(("a", "b"), ("c", ("d", "e")))`` is a
        binary partition tree; a ``(D-1) x D`` matrix of -1/0/1 is a
        sequential binary partition. Both give balance coordinates.

    Raises
    ------
    ParameterError
        If the spec does not describe a complete partition of ``parts``.
    """
    parts = _check_parts(parts)
    D = len(parts)
    index = {p: j for j, p in enumerate(parts)}

    if spec is None:
        spec = parts
    if isinstance(spec, np.ndarray) and spec.ndim == 2:
        q = _sign_rows(spec, D)
        names = tuple(f"balance_{j + 1}" for j in range(D - 1))
    elif all(not isinstance(s, (list, tuple, np.ndarray)) for s in spec):
        order = [str(s) for s in spec]
        if sorted(order) != sorted(parts):
            raise ParameterError("pivot order must be a permutation of the parts")
        q = _pivot_matrix([index[p] for p in order], D)
        names = tuple(f"pivot_{j + 1}" for j in range(D - 1))
    else:
        if not isinstance(spec, (list, tuple)) or len(spec) != 2:
            raise ParameterError("contrast tree must be a nested pair")
        leaves = _tree_leaves(spec)
        if sorted(leaves) != sorted(parts):
            raise ParameterError("contrast tree leaves must be exactly the parts")
        rows = []
        _tree_rows(spec, index, D, rows)
        q = np.array(rows)
        names = tuple(f"balance_{j + 1}" for j in range(D - 1))

    gram = q @ q.T
    if not np.allclose(gram, np.eye(D - 1), atol=1e-10):
        raise ParameterError("ILR spec does not yield orthonormal contrasts")
    return LogRatioBasis("ilr", q, parts, names)


def orthonormal_basis(parts):
    """Default pivot ILR basis; used wherever an orthonormal frame is needed."""
    return ilr_basis(parts)


def _aligned_log(m, basis):
    if isinstance(m, CompositionMatrix):
        names, values = m.part_names, m.values
    else:
        values = np.atleast_2d(np.asarray(m, dtype=float))
        names = basis.part_names
    if tuple(names) != basis.part_names:
        if sorted(names) != sorted(basis.part_names):
            raise LookupFailure("composition parts do not match the basis parts")
        order = [names.index(p) for p in basis.part_names]
        values = values[:, order]
    if values.shape[1] != basis.D:
        raise DomainError(f"expected {basis.D} parts, got {values.shape[1]}")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise DomainError(
            "log-ratios need strictly positive proportions; "
            "apply replace_zeros_knn first")
    return np.log(values)


def transform(m, basis):
    """Log-ratio coordinates ``log(v) @ Q.T`` of every row (``n x m``)."""
    return _aligned_log(m, basis) @ basis.q_matrix.T


def inverse_transform(coords, basis, sample_ids=None, weights="average"):
    """Map log-ratio coordinates back to closed compositions.

    The log-composition is recovered as the zero-sum vector
    ``coords @ pinv(Q).T``, then exponentiated and closed.

    Raises
    ------
    DomainError
        If CLR coordinate rows do not sum to zero within 1e-8.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[1] != basis.m:
        raise DomainError(f"expected {basis.m} coordinates, got {coords.shape[1]}")
    if basis.kind == "clr":
        worst = np.max(np.abs(coords.sum(axis=1)))
        if worst > 1e-8:
            raise DomainError(
                f"CLR coordinates must sum to zero per row (max |sum| = {worst:.3g})")
    logv = coords @ basis.pinv.T
    logv -= logv.max(axis=1, keepdims=True)
    raw = np.exp(logv)
    return close(raw, basis.part_names, sample_ids, weights=weights)
