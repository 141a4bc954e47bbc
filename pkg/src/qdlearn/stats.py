"""Rank-based significance testing for run comparisons.

Mann-Whitney U with mid-rank tie handling: exact null distribution by
dynamic programming for small tie-free samples, normal approximation with
tie correction otherwise. Holm-Bonferroni adjustment for multiple pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Exact enumeration is O(m*n*(m+n)) per tail; past this size the normal
# approximation is accurate to the third decimal anyway.
EXACT_LIMIT = 12


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float  # U for the first sample
    p_value: float
    method: str  # "exact" or "normal"
    alternative: str


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(pooled.size, dtype=float)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # 1-based mid-rank
        i = j + 1
    return ranks


@lru_cache(maxsize=None)
def _exact_u_counts(m: int, n: int) -> tuple:
    """Distribution of U over all C(m+n, m) arrangements (no ties).

    Entry u of the returned tuple counts arrangements with exactly that U.
    Recurrence: the largest pooled value is from sample 1 (adds n to U) or
    from sample 2.
    """
    if m == 0 or n == 0:
        return (1,)
    with_largest = _exact_u_counts(m - 1, n)  # largest value in sample 1: U gains n
    without = _exact_u_counts(m, n - 1)
    size = m * n + 1
    counts = [0] * size
    for u, c in enumerate(with_largest):
        counts[u + n] += c
    for u, c in enumerate(without):
        counts[u] += c
    return tuple(counts)


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(x, y, alternative: str = "two-sided") -> UTestResult:
    """U test of sample ``x`` against sample ``y``.

    ``alternative`` is "two-sided", "greater" (x tends larger), or "less".
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    m, n = x.size, y.size
    pooled = np.concatenate([x, y])
    ranks = _midranks(pooled)
    r1 = ranks[:m].sum()
    u1 = r1 - m * (m + 1) / 2.0
    u2 = m * n - u1

    _, tie_counts = np.unique(pooled, return_counts=True)
    has_ties = bool(np.any(tie_counts > 1))

    if (tie_counts.size == 1) and m + n > 1:
        # every observation identical: no evidence either way
        return UTestResult(u_statistic=u1, p_value=1.0, method="degenerate", alternative=alternative)

    if not has_ties and max(m, n) <= EXACT_LIMIT:
        counts = _exact_u_counts(m, n)
        total = sum(counts)
        u1i = int(round(u1))

        def cdf(u):  # P(U <= u)
            u = min(max(u, -1), m * n)
            return sum(counts[: u + 1]) / total

        if alternative == "two-sided":
            p = 2.0 * cdf(min(u1i, m * n - u1i))
        elif alternative == "greater":
            p = 1.0 - cdf(u1i - 1)
        else:
            p = cdf(u1i)
        return UTestResult(u_statistic=u1, p_value=min(p, 1.0), method="exact", alternative=alternative)

    total = m + n
    mean_u = m * n / 2.0
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (total * (total - 1))
    var_u = m * n / 12.0 * ((total + 1) - tie_term)
    if var_u <= 0:
        return UTestResult(u_statistic=u1, p_value=1.0, method="degenerate", alternative=alternative)
    sd = math.sqrt(var_u)
    if alternative == "two-sided":
        z = (abs(u1 - mean_u) - 0.5) / sd
        p = 2.0 * _normal_sf(max(z, 0.0))
    elif alternative == "greater":
        z = (u1 - mean_u - 0.5) / sd
        p = _normal_sf(z)
    else:
        z = (u1 - mean_u + 0.5) / sd
        p = 1.0 - _normal_sf(z)
    return UTestResult(u_statistic=u1, p_value=min(p, 1.0), method="normal", alternative=alternative)


def holm_bonferroni(p_values) -> np.ndarray:
    """Step-down Holm adjustment; preserves the input order."""
    p = np.asarray(p_values, dtype=float)
    k = p.size
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(k)
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (k - rank) * p[idx])
        adjusted[idx] = min(running, 1.0)
    return adjusted
