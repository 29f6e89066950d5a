"""Contingency tables and the three significance tests used by the pipeline.

All chi-square tail probabilities are carried in log10 space: the weather/time
gate routinely produces p-values far below float underflow (log10 p < -100),
so a direct p would silently collapse to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ComputeError, DataError

#: Decision threshold used throughout the reports.
ALPHA = 0.05

#: Minimum expected count per contingency cell for the chi-square test to be
#: considered valid; cells below this trigger cluster merging upstream.
MIN_EXPECTED = 5.0

_LN10 = math.log(10.0)


@dataclass
class ContingencyTable:
    """K x C counts of destination arrivals per weather/time condition."""

    counts: np.ndarray  # (K, C) non-negative integers
    row_totals: np.ndarray = field(init=False)
    col_totals: np.ndarray = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2:
            raise DataError("contingency counts must be a 2-D matrix")
        if np.any(self.counts < 0):
            raise DataError("contingency counts must be non-negative")
        self.row_totals = self.counts.sum(axis=1)
        self.col_totals = self.counts.sum(axis=0)
        self.n = int(self.counts.sum())
        if self.n <= 0:
            raise DataError("contingency table is empty")

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


@dataclass(frozen=True)
class ChiSquareResult:
    chi2_obs: float
    dof: int
    log10_p: float

    @property
    def p(self) -> float:
        """Linear-space p; underflows to 0.0 for extreme statistics."""
        return 10.0 ** self.log10_p

    def significant_at(self, alpha: float = ALPHA) -> bool:
        return self.log10_p < math.log10(alpha)


def build_contingency(
    labels: Sequence[int], conditions: Sequence[int], K: int, C: int
) -> ContingencyTable:
    """Count (destination, condition) pairs into a K x C table."""
    labels = np.asarray(labels, dtype=np.int64)
    conditions = np.asarray(conditions, dtype=np.int64)
    if labels.shape != conditions.shape:
        raise DataError("labels and conditions must have the same length")
    if labels.size == 0:
        raise DataError("cannot build a contingency table from no samples")
    if np.any(labels < 0) or np.any(labels >= K):
        raise DataError(f"destination label out of range [0, {K})")
    if np.any(conditions < 0) or np.any(conditions >= C):
        raise DataError(f"condition index out of range [0, {C})")
    counts = np.zeros((K, C), dtype=np.int64)
    np.add.at(counts, (labels, conditions), 1)
    return ContingencyTable(counts)


def expected_counts(table: ContingencyTable) -> np.ndarray:
    """Expected cell counts under independence: row total * col total / n."""
    return np.outer(table.row_totals, table.col_totals).astype(np.float64) / table.n


def chi_square_test(table: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-square test of destination/condition independence."""
    K, C = table.shape
    if K < 2 or C < 2:
        raise ComputeError("chi-square test needs at least a 2x2 table")
    e = expected_counts(table)
    if np.any(e == 0):
        raise ComputeError(
            "expected count of zero (empty row or column); merge undersampled "
            "clusters before testing"
        )
    chi2 = float(np.sum((table.counts - e) ** 2 / e))
    dof = (K - 1) * (C - 1)
    return ChiSquareResult(chi2, dof, chi_square_log_sf(chi2, dof))


def chi_square_log_sf(x: float, dof: int) -> float:
    """log10 of the chi-square upper tail Pr(X >= x) with ``dof`` degrees.

    Computed as the regularized upper incomplete gamma Q(dof/2, x/2) fully in
    log space: a power series on the lower tail, a continued fraction on the
    upper, so statistics with p below 1e-300 stay representable.
    """
    if x < 0:
        raise DataError("chi-square statistic must be >= 0")
    if dof < 1:
        raise DataError("degrees of freedom must be >= 1")
    if x == 0.0:
        return 0.0
    s = dof / 2.0
    z = x / 2.0
    if z < s + 1.0:
        return min(0.0, math.log1p(-math.exp(_log_lower_gamma_reg(s, z))) / _LN10)
    return min(0.0, _log_upper_gamma_reg_cf(s, z) / _LN10)


def _log_lower_gamma_reg(s: float, z: float) -> float:
    """ln P(s, z) by power series; accurate for z < s + 1."""
    term = 1.0 / s
    total = term
    k = s
    for _ in range(1000):
        k += 1.0
        term *= z / k
        total += term
        if term < total * 2.3e-16:
            break
    return s * math.log(z) - z - math.lgamma(s) + math.log(total)


def _log_upper_gamma_reg_cf(s: float, z: float) -> float:
    """ln Q(s, z) by modified Lentz continued fraction; for z >= s + 1."""
    tiny = 1e-300
    b = z + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 2.3e-16:
            break
    return -z + s * math.log(z) - math.lgamma(s) + math.log(h)


def mcnemar_test(correct_a: Sequence[bool], correct_b: Sequence[bool]) -> float:
    """Two-sided McNemar test on paired per-sample correctness.

    Exact binomial on the discordant pairs when there are fewer than 25 of
    them, otherwise the continuity-corrected chi-square statistic with one
    degree of freedom. No discordant pairs at all means no evidence: p = 1.
    """
    a = np.asarray(correct_a, dtype=bool)
    bb = np.asarray(correct_b, dtype=bool)
    if a.shape != bb.shape:
        raise DataError("paired correctness vectors must have the same length")
    b = int(np.sum(a & ~bb))
    c = int(np.sum(~a & bb))
    n = b + c
    if n == 0:
        return 1.0
    if n < 25:
        tail = sum(math.comb(n, i) for i in range(min(b, c) + 1))
        return min(1.0, 2.0 * tail / 2.0 ** n)
    stat = (abs(b - c) - 1.0) ** 2 / n
    return 10.0 ** chi_square_log_sf(stat, 1)


def mann_whitney_u_one_sided(x: Sequence[float], y: Sequence[float]) -> float:
    """One-sided Mann-Whitney U test: alternative 'x stochastically smaller'.

    Midranks for ties; normal approximation with tie-corrected variance and
    continuity correction. Degenerate all-equal data returns 0.5.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise DataError("both samples must be non-empty")
    n, m = x.size, y.size
    combined = np.concatenate([x, y])
    ranks, tie_sizes = _midranks(combined)
    u = float(np.sum(ranks[:n])) - n * (n + 1) / 2.0
    N = n + m
    mean = n * m / 2.0
    tie_term = sum(t ** 3 - t for t in tie_sizes)
    var = n * m / 12.0 * ((N + 1) - tie_term / (N * (N - 1.0)))
    if var <= 0:
        return 0.5
    zscore = (u + 0.5 - mean) / math.sqrt(var)
    return 0.5 * math.erfc(-zscore / math.sqrt(2.0))


def _midranks(values: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """1-based ranks with midranks for ties, plus the tie-group sizes."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(len(values), dtype=np.float64)
    tie_sizes: list[int] = []
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        ranks[order[i:j + 1]] = midrank
        if j > i:
            tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes
