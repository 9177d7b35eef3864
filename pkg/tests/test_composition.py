import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from simplexreg.composition import (
    CompositionMatrix,
    close,
    geometric_mean,
    part_weights,
    replace_zeros_knn,
    subcomposition,
)
from simplexreg.errors import (
    DegenerateDataError,
    DomainError,
    LookupFailure,
    ParameterError,
)

positive_rows = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 6)),
                       elements=st.floats(1e-3, 1e3))


class TestClose:
    def test_simple_row(self):
        assert np.allclose(close([[1, 1, 2]]).values, [[0.25, 0.25, 0.5]], atol=0)

    def test_zeros_preserved(self):
        assert np.allclose(close([[3, 0, 7]]).values, [[0.3, 0.0, 0.7]], atol=1e-16)

    def test_idempotent(self, rng):
        m = close(rng.random((10, 4)))
        assert np.array_equal(close(m.values).values, m.values)

    @given(positive_rows, st.floats(1e-6, 1e6))
    @settings(max_examples=60, deadline=None)
    def test_scale_invariance(self, raw, c):
        a = close(raw).values
        b = close(raw * c).values
        assert np.allclose(a, b, rtol=1e-13, atol=1e-16)
        assert np.all(np.abs(a.sum(axis=1) - 1) <= 1e-12)

    def test_all_zero_row_named(self):
        with pytest.raises(DegenerateDataError, match="s2"):
            close([[1, 2], [0, 0]], sample_ids=["s1", "s2"])

    def test_negative_entry(self):
        with pytest.raises(DomainError):
            close([[1, -1, 3]])

    def test_default_weights_are_column_means(self, rng):
        m = close(rng.random((12, 5)))
        assert np.allclose(m.weights, m.values.mean(axis=0))
        assert m.weights.sum() == pytest.approx(1.0)

    def test_uniform_and_explicit_weights(self):
        assert np.allclose(close([[1, 2, 3]], weights="uniform").weights, 1 / 3)
        assert np.allclose(close([[1, 2, 3]], weights=[2, 1, 1]).weights, [.5, .25, .25])
        with pytest.raises(ParameterError):
            part_weights(np.ones((1, 3)) / 3, [1, 1])


class TestCompositionMatrix:
    def test_validation(self):
        with pytest.raises(DomainError):
            CompositionMatrix([[0.5, 0.6]])
        with pytest.raises(DomainError):
            CompositionMatrix([[1.0]])
        with pytest.raises(DomainError):
            CompositionMatrix([[0.5, 0.5]], part_names=["a", "a"])

    def test_read_only(self):
        m = close([[1, 2, 3]])
        with pytest.raises(ValueError):
            m.values[0, 0] = 1.0

    def test_lookup(self):
        m = close([[1, 2, 3]], ["a", "b", "c"])
        assert m.part_index("b") == 1
        with pytest.raises(LookupFailure):
            m.part_index("z")

    def test_log_values_rejects_zeros(self):
        with pytest.raises(DomainError):
            close([[1, 0, 3]]).log_values()


class TestGeometricMean:
    @pytest.mark.parametrize("v, g", [([1, 1, 1], 1.0), ([1, 4], 2.0),
                                      ([np.e, np.e ** 3], np.e ** 2)])
    def test_values(self, v, g):
        assert geometric_mean(v) == pytest.approx(g, rel=1e-15)

    def test_non_positive(self):
        with pytest.raises(DomainError):
            geometric_mean([1.0, 0.0])


class TestSubcomposition:
    def test_full_set_identity(self, rng):
        m = close(rng.random((8, 4)), list("abcd"))
        s = subcomposition(m, list("abcd"))
        assert np.allclose(s.values, m.values, rtol=1e-15)
        assert np.allclose(s.weights, m.weights)

    def test_reclosure(self):
        s = subcomposition(close([[0.2, 0.3, 0.5]], list("abc")), ["a", "c"])
        assert np.allclose(s.values, [[0.2 / 0.7, 0.5 / 0.7]], rtol=1e-15)

    def test_ratios_preserved(self, rng):
        m = close(rng.random((50, 6)) + 1e-3, list("abcdef"))
        s = subcomposition(m, ["f", "b", "d"])
        full = m.values[:, [5, 1, 3]]
        assert np.allclose(s.values[:, 0] / s.values[:, 1], full[:, 0] / full[:, 1],
                           rtol=1e-14)
        assert np.allclose(s.values[:, 2] / s.values[:, 1], full[:, 2] / full[:, 1],
                           rtol=1e-14)

    def test_weights_renormalized(self, rng):
        m = close(rng.random((20, 4)), list("abcd"))
        s = subcomposition(m, ["a", "c"])
        w = m.weights[[0, 2]]
        assert np.allclose(s.weights, w / w.sum())

    def test_errors(self):
        m = close([[1, 2, 3]], list("abc"))
        with pytest.raises(LookupFailure):
            subcomposition(m, ["a", "q"])
        with pytest.raises(ParameterError):
            subcomposition(m, ["a"])


class TestReplaceZerosKnn:
    def test_no_zeros_is_identity(self, rng):
        m = close(rng.random((10, 3)) + 0.01)
        for k in (1, 3, 9):
            assert replace_zeros_knn(m, k) is m

    def test_hand_computed_k1(self):
        # row 1 has a zero in part 2. The parts positive in both row 1 and
        # each donor are parts 1 and 3. CLR of (0.1, 0.9) vs (0.2, 0.5) and
        # (0.3, 0.4): distances sqrt(2)/2 * |log 9 - log 2.5| and
        # sqrt(2)/2 * |log 9 - log(4/3)|, so row 0 is nearest. Its part-2 value
        # 0.3 is scaled by sqrt(0.1 * 0.9) / sqrt(0.2 * 0.5).
        m = close([[0.2, 0.3, 0.5], [0.1, 0.0, 0.9], [0.3, 0.3, 0.4]])
        out = replace_zeros_knn(m, k=1)
        imputed = 0.3 * np.sqrt(0.09) / np.sqrt(0.1)
        row = np.array([0.1 * (1 - imputed), imputed, 0.9 * (1 - imputed)])
        row /= row.sum()
        assert np.allclose(out.values[1], row, rtol=1e-14)
        assert np.allclose(out.values[1], [0.0715395, 0.28460499, 0.64385551], atol=1e-8)
        assert out.values[1, 2] / out.values[1, 0] == pytest.approx(9.0, rel=1e-12)
        assert np.array_equal(out.values[[0, 2]], m.values[[0, 2]])

    def test_two_zeros_k3(self, rng):
        raw = rng.random((12, 5)) + 0.05
        raw[4, [1, 3]] = 0.0
        m = close(raw)
        out = replace_zeros_knn(m, k=3)
        assert out.is_positive()
        assert np.abs(out.values.sum(axis=1) - 1).max() <= 1e-12
        kept = [0, 2, 4]
        r_in = m.values[4, kept] / m.values[4, kept[0]]
        r_out = out.values[4, kept] / out.values[4, kept[0]]
        assert np.allclose(r_in, r_out, rtol=1e-12)

    def test_weights_and_labels_carried(self, rng):
        raw = rng.random((10, 4)) + 0.1
        raw[0, 0] = 0
        m = close(raw, list("abcd"), [f"s{i}" for i in range(10)])
        out = replace_zeros_knn(m, 2)
        assert out.part_names == m.part_names and out.sample_ids == m.sample_ids
        assert np.array_equal(out.weights, m.weights)

    def test_part_zero_everywhere(self):
        with pytest.raises(DegenerateDataError):
            replace_zeros_knn(close([[1, 0, 2], [3, 0, 1], [1, 0, 1]]), 1)

    def test_too_few_donors(self):
        m = close([[1, 0, 2], [3, 1, 1], [1, 0, 1]])
        with pytest.raises(ParameterError):
            replace_zeros_knn(m, 2)
        with pytest.raises(ParameterError):
            replace_zeros_knn(m, 0)

    def test_deterministic_with_ties(self):
        raw = np.array([[1, 0, 1], [1, 1, 1], [1, 2, 1], [1, 3, 1.0]])
        a = replace_zeros_knn(close(raw), 1).values
        b = replace_zeros_knn(close(raw), 1).values
        assert np.array_equal(a, b)
        # all donors are equidistant, so the lowest index (row 1) wins: its
        # value 1/3 is scaled by the geometric-mean ratio 0.5 / (1/3)
        assert a[0, 1] / a[0, 0] == pytest.approx(2.0, rel=1e-12)
