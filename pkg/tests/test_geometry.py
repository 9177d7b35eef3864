import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simplexreg.composition import close
from simplexreg.errors import DegenerateDataError, GroupingError, ParameterError
from simplexreg.geometry import (
    discriminant_axis,
    group_mean_summary,
    pairwise_logratio_variance,
    procrustes_correlation,
    rank_alr_denominators,
    summated_logratio,
    total_logratio_variance,
    weighted_clr,
    weighted_lra,
)
from simplexreg.transforms import alr_basis, clr_basis, ilr_basis

from conftest import random_composition


class TestTotalVariance:
    def test_identical_rows(self):
        m = close(np.tile([0.2, 0.3, 0.5], (6, 1)))
        assert total_logratio_variance(m) == pytest.approx(0.0, abs=1e-30)

    def test_dual_formula(self, rng):
        m = random_composition(rng, 20, 5)
        assert abs(total_logratio_variance(m) - pairwise_logratio_variance(m)) <= 1e-10

    def test_hand_instance(self):
        m = close([[0.2, 0.3, 0.5], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])
        w = m.weights
        lv = np.log(m.values)
        brute = 0.0
        for d, h in itertools.combinations(range(3), 2):
            lr = lv[:, d] - lv[:, h]
            brute += w[d] * w[h] * np.mean((lr - lr.mean()) ** 2)
        assert total_logratio_variance(m) == pytest.approx(brute, rel=1e-13)

    @given(st.integers(0, 10_000), st.integers(2, 8), st.integers(2, 30))
    @settings(max_examples=40, deadline=None)
    def test_dual_formula_property(self, seed, D, n):
        m = random_composition(np.random.default_rng(seed), n, D, weights="average")
        assert abs(total_logratio_variance(m) - pairwise_logratio_variance(m)) <= 1e-10

    def test_needs_two_rows(self):
        with pytest.raises(DegenerateDataError):
            total_logratio_variance(close([[1, 2, 3]]))


class TestProcrustes:
    def test_two_parts_alr(self, rng):
        m = random_composition(rng, 30, 2)
        for den in m.part_names:
            assert procrustes_correlation(m, alr_basis(m.part_names, den)) == pytest.approx(1.0)

    def test_isometric_bases_uniform_weights(self, rng):
        m = random_composition(rng, 40, 6, weights="uniform")
        assert procrustes_correlation(m, clr_basis(m.part_names)) == pytest.approx(1.0)
        assert procrustes_correlation(m, ilr_basis(m.part_names)) == pytest.approx(1.0)

    def test_range(self, rng):
        m = random_composition(rng, 40, 6)
        for den in m.part_names:
            r = procrustes_correlation(m, alr_basis(m.part_names, den))
            assert 0.0 <= r <= 1.0

    def test_against_scipy_procrustes(self, rng):
        from scipy.spatial import procrustes

        from simplexreg.geometry import _basis_configuration, _exact_configuration

        m = random_composition(rng, 25, 4)
        exact = _exact_configuration(m)
        for b in (alr_basis(m.part_names, "p1"), ilr_basis(m.part_names)):
            conf = _basis_configuration(m, b)
            padded = np.column_stack([conf, np.zeros(m.n)])
            _, _, disparity = procrustes(exact, padded)
            assert procrustes_correlation(m, b) == pytest.approx(
                np.sqrt(1 - disparity), abs=1e-10)

    def test_degenerate(self):
        m = close(np.tile([0.2, 0.3, 0.5], (5, 1)))
        with pytest.raises(DegenerateDataError):
            procrustes_correlation(m, alr_basis(m.part_names))


class TestRanking:
    def test_two_parts(self, rng):
        rows = rank_alr_denominators(random_composition(rng, 20, 2))
        assert [r.correlation for r in rows] == pytest.approx([1.0, 1.0])

    def test_exchangeable_parts(self, rng):
        m = random_composition(rng, 4000, 5, weights="uniform")
        cors = [r.correlation for r in rank_alr_denominators(m)]
        assert max(cors) - min(cors) < 0.01

    def test_dominant_part_ranks_first(self, rng):
        lv = rng.normal(0, 0.5, (300, 5))
        lv[:, 3] += 3.0
        m = close(np.exp(lv), list("abcde"))
        rows = rank_alr_denominators(m)
        assert rows[0].part == "d"
        assert rows[0].weight == pytest.approx(m.weights[3])
        assert [r.correlation for r in rows] == sorted((r.correlation for r in rows),
                                                       reverse=True)


class TestLra:
    def test_proportions_complete(self, rng):
        m = random_composition(rng, 50, 6)
        lra = weighted_lra(m)
        ve = lra.variance_explained
        assert ve.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.all(ve >= 0) and np.all(np.diff(ve) <= 1e-15)

    def test_total_matches_eq7(self, rng):
        m = random_composition(rng, 50, 6)
        assert weighted_lra(m, 2).total_variance == pytest.approx(
            total_logratio_variance(m), abs=1e-10)

    def test_rank_one(self, rng):
        contrast = np.array([1.0, -0.5, 0.2, -0.7])
        t = rng.normal(0, 1, 60)
        m = close(np.exp(np.outer(t, contrast)))
        assert weighted_lra(m, 1).variance_explained[0] == pytest.approx(1.0, abs=1e-8)

    def test_reconstruction(self, rng):
        m = random_composition(rng, 30, 5)
        lra = weighted_lra(m)
        target = weighted_clr(m)
        target = target - target.mean(axis=0)
        assert np.abs(lra.reconstruct() - target).max() <= 1e-8

    def test_row_permutation_invariant(self, rng):
        m = random_composition(rng, 30, 5)
        perm = rng.permutation(30)
        a = weighted_lra(m, 3)
        b = weighted_lra(m.take(perm), 3)
        assert np.allclose(a.variance_explained, b.variance_explained, atol=1e-12)
        assert np.allclose(a.row_scores[perm], b.row_scores, atol=1e-10)

    def test_rank_too_large(self, rng):
        with pytest.raises(ParameterError):
            weighted_lra(random_composition(rng, 10, 4), 4)


def _planted(rng, n=400, shift=2.0, noise=0.1):
    contrast = np.array([1.0, 0.5, -0.3, -0.2, -1.0])
    g = np.repeat(["A", "B"], n // 2)
    lv = rng.normal(0, noise, (n, 5)) + np.outer(g == "B", shift * contrast)
    return close(np.exp(lv)), g, contrast


class TestDiscriminant:
    def test_planted_direction(self, rng):
        m, g, c = _planted(rng)
        res = discriminant_axis(m, g)
        planted = c - c @ m.weights
        cos = res.axis @ planted / np.linalg.norm(res.axis) / np.linalg.norm(planted)
        assert cos >= 0.999
        assert res.group_mean_scores[1] > res.group_mean_scores[0]
        assert np.corrcoef(res.scores, weighted_clr(m) @ (m.weights * planted))[0, 1] > 0.99

    def test_weighted_zero_sum_and_unit_norm(self, rng):
        m, g, _ = _planted(rng, noise=1.0, shift=0.3)
        res = discriminant_axis(m, g)
        assert abs(res.axis @ m.weights) <= 1e-12
        assert res.axis ** 2 @ m.weights == pytest.approx(1.0)

    def test_residual_orthogonal(self, rng):
        m, g, _ = _planted(rng, noise=1.0, shift=0.3)
        res = discriminant_axis(m, g)
        loads = res.residual_lra.column_loadings
        u = res.axis * np.sqrt(m.weights)
        assert np.abs(u @ loads).max() <= 1e-10

    def test_single_group(self, rng):
        with pytest.raises(GroupingError):
            discriminant_axis(random_composition(rng, 10, 4), ["a"] * 10)

    def test_identical_means(self):
        v = close([[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]] * 2)
        with pytest.raises(DegenerateDataError):
            discriminant_axis(v, ["a", "a", "b", "b"])


class TestSlr:
    def test_reduces_to_pairwise(self, rng):
        m = random_composition(rng, 20, 4)
        assert np.allclose(summated_logratio(m, "p0", "p2"),
                           np.log(m.values[:, 0] / m.values[:, 2]), rtol=1e-14)

    def test_antisymmetric(self, rng):
        m = random_composition(rng, 20, 4)
        a = summated_logratio(m, ["p0", "p1"], ["p3"])
        assert np.allclose(a, -summated_logratio(m, ["p3"], ["p0", "p1"]), atol=0)

    def test_overlap(self, rng):
        with pytest.raises(ParameterError):
            summated_logratio(random_composition(rng, 5, 4), ["p0", "p1"], ["p1"])


class TestGroupMeanSummary:
    def test_planted_shift(self, rng):
        x = np.r_[rng.normal(0, 1, 100), rng.normal(2, 1, 100)]
        g = np.repeat(["a", "b"], 100)
        s = group_mean_summary(x, g, replicates=2000, seed=5)
        assert s.p_value < 0.001
        assert s.ci95[0][1] < s.ci95[1][0]
        for k in range(2):
            lo95, hi95 = s.ci95[k]
            lo50, hi50 = s.ci50[k]
            assert lo95 <= lo50 <= s.means[k] <= hi50 <= hi95

    def test_welch_p_value(self, rng):
        from scipy import stats

        x = np.r_[rng.normal(0, 1, 30), rng.normal(0.5, 2, 50)]
        g = np.repeat(["a", "b"], [30, 50])
        s = group_mean_summary(x, g, replicates=200, seed=1)
        assert s.p_value == pytest.approx(stats.ttest_ind(x[:30], x[30:],
                                                          equal_var=False).pvalue)

    def test_workers_do_not_change_result(self, rng):
        x = rng.normal(size=60)
        g = np.repeat(["a", "b"], 30)
        a = group_mean_summary(x, g, replicates=1200, seed=9, workers=1)
        b = group_mean_summary(x, g, replicates=1200, seed=9, workers=4)
        assert a == b

    def test_constant(self):
        with pytest.raises(DegenerateDataError):
            group_mean_summary(np.ones(6), list("aaabbb"), replicates=100)

    def test_tiny_group(self):
        with pytest.raises(GroupingError):
            group_mean_summary([1.0, 2.0, 3.0], list("aab"), replicates=100)
