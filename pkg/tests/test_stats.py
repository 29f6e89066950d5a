import itertools
import math

import mpmath as mp
import numpy as np
import pytest

from pedcast.errors import ComputeError, DataError
from pedcast.stats import (
    ContingencyTable,
    build_contingency,
    chi_square_log_sf,
    chi_square_test,
    expected_counts,
    mann_whitney_u_one_sided,
    mcnemar_test,
)

# printed K=10 arrival counts, rows in original class order 1..10
TABLE_K10 = np.array([
    [645, 601, 1135, 1722],
    [71, 102, 113, 256],
    [25, 46, 123, 230],
    [625, 953, 2010, 3912],
    [75, 106, 281, 445],
    [1, 2, 6, 21],
    [126, 186, 439, 667],
    [653, 1044, 1226, 2303],
    [938, 1072, 2637, 3436],
    [20, 38, 55, 190],
])

# class 6 (index 5) merged into class 10 (index 9)
TABLE_MERGED = np.vstack([
    TABLE_K10[[0, 1, 2, 3, 4, 6, 7, 8]],
    TABLE_K10[5] + TABLE_K10[9],
])


def log10_sf_quadrature(x, dof):
    """High-precision oracle: integrate the chi-square density upper tail.

    Substituting t = x + u keeps the integrand O(1)-scaled, so the quadrature
    stays accurate even when the tail probability is below 1e-100.
    """
    with mp.workdps(40):
        s = mp.mpf(dof) / 2
        xm = mp.mpf(x)
        integral = mp.quad(lambda u: (xm + u) ** (s - 1) * mp.e ** (-u / 2), [0, mp.inf])
        ln_p = -xm / 2 + mp.log(integral) - s * mp.log(2) - mp.loggamma(s)
        return float(ln_p / mp.log(10))


class TestContingency:
    def test_direct_count(self):
        t = build_contingency([0, 0, 1], [0, 1, 1], 2, 2)
        np.testing.assert_array_equal(t.counts, [[1, 1], [0, 1]])
        assert t.n == 3

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            build_contingency([], [], 2, 2)

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError):
            build_contingency([0, 2], [0, 0], 2, 2)

    def test_printed_arrival_totals(self):
        t = ContingencyTable(TABLE_MERGED)
        assert list(t.row_totals) == [4103, 542, 424, 7500, 907, 1418, 5226, 8083, 333]
        assert list(t.col_totals) == [3179, 4150, 8025, 13182]
        assert t.n == 28536


class TestExpectedCounts:
    def test_undersized_cell_before_merge(self):
        t = ContingencyTable(TABLE_K10)
        e = expected_counts(t)
        assert e[5, 0] == pytest.approx(3.34, abs=0.01)
        assert e[5, 0] == pytest.approx(30 * 3179 / 28536)

    def test_merged_cell_satisfies_minimum(self):
        t = ContingencyTable(TABLE_MERGED)
        e = expected_counts(t)
        assert e[8, 0] == pytest.approx(37.09, abs=0.02)
        assert np.all(e >= 5.0)

    def test_uniform_table(self):
        e = expected_counts(ContingencyTable(np.full((2, 2), 5)))
        np.testing.assert_allclose(e, 5.0)

    def test_margin_sums(self):
        rng = np.random.default_rng(0)
        t = ContingencyTable(rng.integers(1, 50, size=(5, 3)))
        e = expected_counts(t)
        np.testing.assert_allclose(e.sum(axis=1), t.row_totals)
        np.testing.assert_allclose(e.sum(axis=0), t.col_totals)


class TestChiSquare:
    def test_null_fixed_point(self):
        # outer-product counts: observed equals expected exactly
        counts = np.outer([2, 4, 6], [3, 5])
        r = chi_square_test(ContingencyTable(counts))
        assert r.chi2_obs == pytest.approx(0.0, abs=1e-12)
        assert r.log10_p == 0.0

    def test_merged_arrival_table(self):
        r = chi_square_test(ContingencyTable(TABLE_MERGED))
        assert r.chi2_obs == pytest.approx(588.64, rel=0.015)
        assert r.dof == 24
        assert r.log10_p < -100
        assert r.significant_at(0.05)

    def test_matches_textbook_formula_oracle(self):
        rng = np.random.default_rng(8)
        counts = rng.integers(5, 60, size=(3, 3))
        t = ContingencyTable(counts)
        r = chi_square_test(t)
        total = counts.sum()
        acc = 0.0
        for i in range(3):
            for j in range(3):
                e = counts[i].sum() * counts[:, j].sum() / total
                acc += (counts[i, j] - e) ** 2 / e
        assert r.chi2_obs == pytest.approx(acc, abs=1e-10)

    def test_zero_expected_cell_directs_to_merge(self):
        with pytest.raises(ComputeError, match="merge"):
            chi_square_test(ContingencyTable(np.array([[5, 0], [7, 0]])))

    def test_row_column_permutation_invariance(self):
        rng = np.random.default_rng(4)
        counts = rng.integers(2, 40, size=(4, 3))
        base = chi_square_test(ContingencyTable(counts)).chi2_obs
        perm = counts[rng.permutation(4)][:, rng.permutation(3)]
        assert chi_square_test(ContingencyTable(perm)).chi2_obs == pytest.approx(base, abs=1e-10)

    def test_integer_scaling_scales_statistic(self):
        rng = np.random.default_rng(5)
        counts = rng.integers(2, 40, size=(3, 4))
        base = chi_square_test(ContingencyTable(counts)).chi2_obs
        scaled = chi_square_test(ContingencyTable(counts * 3)).chi2_obs
        assert scaled == pytest.approx(3 * base, rel=1e-12)


class TestChiSquareLogSf:
    def test_zero_statistic(self):
        assert chi_square_log_sf(0.0, 5) == 0.0

    def test_dof_two_closed_form(self):
        # upper tail with two degrees is exactly exp(-x/2)
        x = 2.0 * math.log(20.0)
        assert chi_square_log_sf(x, 2) == pytest.approx(math.log10(0.05), abs=1e-12)

    def test_matches_quadrature_oracle_on_deep_tail(self):
        ours = chi_square_log_sf(588.64, 24)
        oracle = log10_sf_quadrature(588.64, 24)
        assert abs(ours - oracle) / abs(oracle) < 1e-6

    def test_matches_quadrature_across_dof_range(self):
        for dof in (1, 2, 3, 7, 16, 24, 33, 40):
            for x in (0.3, 1.7, 6.0, 30.0, 200.0, 900.0):
                ours = chi_square_log_sf(x, dof)
                oracle = log10_sf_quadrature(x, dof)
                assert abs(ours - oracle) <= 1e-6 * max(1.0, abs(oracle)), (dof, x)

    def test_monotone_decreasing_in_statistic(self):
        xs = np.linspace(0.0, 120.0, 200)
        for dof in (1, 6, 24):
            vals = [chi_square_log_sf(float(x), dof) for x in xs]
            assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_no_underflow_far_below_float_range(self):
        lp = chi_square_log_sf(6000.0, 10)
        assert lp < -1200  # direct p would underflow to 0 here
        assert np.isfinite(lp)


def exact_binomial_two_sided(b, c):
    n = b + c
    tail = sum(math.comb(n, i) for i in range(min(b, c) + 1))
    return min(1.0, 2.0 * tail / 2.0 ** n)


class TestMcNemar:
    def test_identical_classifiers(self):
        correct = [True, False, True, True]
        assert mcnemar_test(correct, correct) == 1.0

    def test_one_sided_discordance_closed_form(self):
        a = [True] * 10 + [True] * 3
        b = [False] * 10 + [True] * 3
        assert mcnemar_test(a, b) == pytest.approx(2 * 0.5 ** 10)

    def test_large_counts_match_exact_binomial(self):
        # continuity-corrected chi-square vs the exact test it approximates
        a = [True] * 30 + [False] * 60 + [True] * 10
        b = [False] * 30 + [True] * 60 + [True] * 10
        approx = mcnemar_test(a, b)
        exact = exact_binomial_two_sided(30, 60)
        assert approx == pytest.approx(exact, abs=7e-4)
        assert approx < 0.05 and exact < 0.05

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.random(200) < 0.7
        b = rng.random(200) < 0.6
        assert mcnemar_test(a, b) == pytest.approx(mcnemar_test(b, a), abs=1e-15)


def permutation_oracle(x, y):
    """Exact one-sided permutation distribution of the rank-sum statistic."""
    pooled = np.concatenate([x, y])
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    n = len(x)
    u_obs = ranks[:n].sum() - n * (n + 1) / 2.0
    count = 0
    total = 0
    for combo in itertools.combinations(range(len(pooled)), n):
        u = ranks[list(combo)].sum() - n * (n + 1) / 2.0
        count += u <= u_obs + 1e-12
        total += 1
    return count / total


class TestMannWhitney:
    def test_all_ties(self):
        assert mann_whitney_u_one_sided([2.0, 2.0, 2.0], [2.0, 2.0, 2.0]) == 0.5

    def test_extreme_separation(self):
        p = mann_whitney_u_one_sided([1.0, 2.0, 3.0], [10.0, 11.0, 12.0])
        # U = 0 is the smallest achievable statistic for n = m = 3
        worse = mann_whitney_u_one_sided([1.0, 2.0, 10.5], [10.0, 11.0, 12.0])
        assert p < worse
        assert p < 0.05

    def test_matches_permutation_oracle(self):
        rng = np.random.default_rng(6)
        for shift in (0.0, 0.8, 2.0):
            x = rng.normal(0.0, 1.0, size=8)
            y = rng.normal(shift, 1.0, size=8)
            approx = mann_whitney_u_one_sided(x, y)
            exact = permutation_oracle(x, y)
            assert abs(approx - exact) < 0.01, shift

    def test_one_sided_complement_on_tie_free_data(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=12)
        y = rng.normal(size=15) + 0.5
        p_xy = mann_whitney_u_one_sided(x, y)
        p_yx = mann_whitney_u_one_sided(y, x)
        # continuity corrections overlap by one lattice step
        assert p_xy + p_yx == pytest.approx(1.0, abs=0.02)

    def test_empty_sample_rejected(self):
        with pytest.raises(DataError):
            mann_whitney_u_one_sided([], [1.0])
