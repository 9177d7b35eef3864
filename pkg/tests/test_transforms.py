import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from simplexreg.composition import close
from simplexreg.errors import DomainError, LookupFailure, ParameterError
from simplexreg.transforms import (
    alr_basis,
    clr_basis,
    ilr_basis,
    inverse_transform,
    transform,
)

from conftest import random_composition


def exact_row(logs):
    return close(np.exp(np.atleast_2d(logs)), [f"p{j}" for j in range(len(logs))])


PARTS3 = ["p0", "p1", "p2"]


class TestAlr:
    def test_structure(self):
        q = alr_basis(PARTS3, "p2").q_matrix
        assert np.array_equal(q, [[1, 0, -1], [0, 1, -1]])
        assert np.array_equal(alr_basis(["a", "b"]).q_matrix, [[1, -1]])

    def test_exact_coordinates(self):
        b = alr_basis(PARTS3, "p2")
        assert np.allclose(transform(exact_row([1, 2, 3]), b), [[-2, -1]], atol=1e-14)
        assert b.coordinate_names == ("p0/p2", "p1/p2")

    def test_unknown_denominator(self):
        with pytest.raises(LookupFailure):
            alr_basis(PARTS3, "zz")

    def test_inverse_exact(self):
        out = inverse_transform([[-2, -1]], alr_basis(PARTS3, "p2"))
        expected = np.exp([-2, -1, 0]) / np.exp([-2, -1, 0]).sum()
        assert np.allclose(out.values, [expected], rtol=1e-14)


class TestClr:
    def test_structure(self):
        q = clr_basis(list("abcd")).q_matrix
        assert np.allclose(np.diag(q), 0.75) and np.isclose(q[0, 1], -0.25)

    def test_exact(self):
        assert np.allclose(transform(exact_row([1, 1, 4]), clr_basis(PARTS3)),
                           [[-1, -1, 2]], atol=1e-14)

    def test_zero_sum(self, rng):
        m = random_composition(rng, 100, 7)
        assert np.abs(transform(m, clr_basis(m.part_names)).sum(axis=1)).max() <= 1e-12

    def test_inverse_rejects_non_zero_sum(self):
        with pytest.raises(DomainError):
            inverse_transform([[1.0, 0.0, 0.0]], clr_basis(PARTS3))


class TestIlr:
    def test_d2(self):
        assert np.allclose(ilr_basis(["a", "b"]).q_matrix, [[2 ** -0.5, -(2 ** -0.5)]])

    def test_orthonormal_random_pivot(self, rng):
        parts = [f"p{j}" for j in range(9)]
        q = ilr_basis(parts, list(rng.permutation(parts))).q_matrix
        assert np.allclose(q @ q.T, np.eye(8), atol=1e-14)
        assert np.abs(q.sum(axis=1)).max() <= 1e-12

    def test_pivot_formula(self, rng):
        m = random_composition(rng, 5, 4)
        z = transform(m, ilr_basis(m.part_names))
        logv = np.log(m.values)
        D = 4
        for j in range(D - 1):
            c = np.sqrt((D - j - 1) / (D - j))
            expected = c * (logv[:, j] - logv[:, j + 1:].mean(axis=1))
            assert np.allclose(z[:, j], expected, atol=1e-13)

    def test_tree_and_sign_matrix_agree(self):
        parts = list("abcd")
        tree = ilr_basis(parts, (("a", "b"), ("c", "d"))).q_matrix
        signs = np.array([[1, 1, -1, -1], [1, -1, 0, 0], [0, 0, 1, -1]])
        assert np.allclose(tree, ilr_basis(parts, signs).q_matrix)

    @pytest.mark.parametrize("spec", [["a", "b"], (("a", "b"), "a"),
                                      np.array([[1, 1, 1], [1, -1, 0]])])
    def test_invalid_spec(self, spec):
        with pytest.raises(ParameterError):
            ilr_basis(["a", "b", "c"], spec)

    def test_uniform_is_zero(self):
        assert np.allclose(transform(np.ones((3, 5)) / 5, ilr_basis(
            [f"p{j}" for j in range(5)])), 0, atol=1e-15)


class TestTransform:
    def test_basis_change_is_linear(self, rng):
        m = random_composition(rng, 30, 5)
        alr = alr_basis(m.part_names, "p1")
        clr = clr_basis(m.part_names)
        # clr = alr @ (pinv(Q_alr).T @ Q_clr.T) with the exact inverse map
        mapping = alr.pinv.T @ clr.q_matrix.T
        assert np.allclose(transform(m, alr) @ mapping, transform(m, clr), atol=1e-12)

    def test_reorders_parts_by_name(self, rng):
        m = random_composition(rng, 4, 3)
        b = alr_basis(["p2", "p0", "p1"], "p0")
        assert np.allclose(transform(m, b)[:, 0], np.log(m.values[:, 2] / m.values[:, 0]))

    def test_zero_entry(self):
        with pytest.raises(DomainError, match="replace_zeros_knn"):
            transform(close([[1, 0, 2]], PARTS3), clr_basis(PARTS3))

    def test_zero_coords_give_uniform(self):
        assert np.allclose(inverse_transform(np.zeros((2, 3)), ilr_basis(list("abcd"))).values,
                           0.25)

    @pytest.mark.parametrize("make", [lambda p: alr_basis(p, p[2]), clr_basis, ilr_basis])
    def test_round_trip_100(self, rng, make):
        m = random_composition(rng, 100, 6, spread=2.0)
        b = make(m.part_names)
        back = inverse_transform(transform(m, b), b)
        assert np.abs(back.values - m.values).max() <= 1e-10
        assert np.abs(transform(back, b) - transform(m, b)).max() <= 1e-10

    @given(arrays(np.float64, (3, 4), elements=st.floats(1e-4, 1e4)),
           st.floats(1e-3, 1e3))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariant(self, raw, c):
        b = ilr_basis(list("abcd"))
        assert np.allclose(transform(raw, b), transform(raw * c, b), atol=1e-10)

    def test_all_q_rows_zero_sum(self):
        parts = [f"p{j}" for j in range(7)]
        for b in (alr_basis(parts), clr_basis(parts), ilr_basis(parts)):
            assert np.abs(b.q_matrix.sum(axis=1)).max() <= 1e-15
