"""Summaries and rank tests for comparing final RMSE distributions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "EmptySample",
    "EXACT_MAX_LABELLINGS",
    "SampleSummary",
    "SignificanceMatrix",
    "mann_whitney_one_tailed",
    "bonferroni",
    "significance_matrix",
    "summarize",
]

# Up to this many labellings of the pooled sample the p-value comes from the
# exact permutation distribution (C(16, 8) = 12870 covers every pair of samples
# of size <= 8).  On small tied samples the normal approximation can be off by
# more than 0.05.
EXACT_MAX_LABELLINGS = 20_000

_NORMAL = NormalDist()


class EmptySample(ValueError):
    pass


def _sample(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size == 0:
        raise EmptySample(f"sample {name} is empty")
    return x


def _exact_lower_tail(ranks: np.ndarray, n1: int, u_obs: float) -> float:
    """P(U_a <= u_obs) over every equally likely assignment of labels."""
    n = ranks.size
    small = min(n1, n - n1)
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), small)), dtype=np.intp
    ).reshape(-1, small)
    u_small = ranks[combos].sum(axis=1) - small * (small + 1) / 2.0
    u_a = u_small if small == n1 else n1 * (n - n1) - u_small
    return float(np.mean(u_a <= u_obs + 1e-9))


def mann_whitney_one_tailed(a, b, method: str = "auto") -> float:
    """One-sided Mann-Whitney U test of "``a`` tends to be smaller than ``b``".

    ``method="asymptotic"`` uses the normal approximation with tie and
    continuity corrections; ``"exact"`` enumerates every labelling of the
    pooled sample; ``"auto"`` is exact when the pooled sample has at most
    ``EXACT_MAX_LABELLINGS`` labellings.  Zero rank variance (all values tied) gives 1.0.
    """
    a = _sample(a, "a")
    b = _sample(b, "b")
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = rankdata(np.concatenate([a, b]))
    u_a = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0

    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts)) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 1e-12:
        return 1.0

    if method == "auto":
        method = "exact" if math.comb(n, min(n1, n2)) <= EXACT_MAX_LABELLINGS else "asymptotic"
    if method == "exact":
        return _exact_lower_tail(ranks, n1, u_a)
    if method != "asymptotic":
        raise ValueError(f"unknown method {method!r}")
    z = (u_a - n1 * n2 / 2.0 + 0.5) / math.sqrt(var)
    return min(1.0, _NORMAL.cdf(z))


def bonferroni(p: float, m: int) -> float:
    if m < 1:
        raise ValueError("comparison count must be at least 1")
    return min(1.0, m * p)


@dataclass(frozen=True)
class SignificanceMatrix:
    """``pvalues[i, j]``: adjusted p-value for "row ``i`` beats column ``j``"
    (lower RMSE).  The diagonal is NaN."""

    labels: tuple[str, ...]
    pvalues: np.ndarray = field(repr=False)

    def get(self, row: str, col: str) -> float:
        return float(self.pvalues[self.labels.index(row), self.labels.index(col)])

    def wins(self, alpha: float) -> dict[str, list[str]]:
        return {
            label: [
                other
                for j, other in enumerate(self.labels)
                if i != j and self.pvalues[i, j] <= alpha
            ]
            for i, label in enumerate(self.labels)
        }


def significance_matrix(results) -> SignificanceMatrix:
    """Pairwise one-sided tests over ``results`` (mapping label -> sample),
    Bonferroni-adjusted for the number of off-diagonal cells."""
    labels = tuple(results)
    if len(labels) < 2:
        raise ValueError("need at least two algorithms to compare")
    samples = [_sample(results[label], label) for label in labels]
    k = len(labels)
    m = k * (k - 1)
    pvalues = np.full((k, k), np.nan)
    for i, j in itertools.permutations(range(k), 2):
        pvalues[i, j] = bonferroni(mann_whitney_one_tailed(samples[i], samples[j]), m)
    return SignificanceMatrix(labels, pvalues)


@dataclass(frozen=True)
class SampleSummary:
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...] = ()

    @property
    def q2(self) -> float:
        return self.median

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def summarize(sample) -> SampleSummary:
    """Box-plot statistics: linear-interpolation quartiles and 1.5 IQR fences."""
    x = np.sort(_sample(sample, "sample"))
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    lo = q1 - 1.5 * (q3 - q1)
    hi = q3 + 1.5 * (q3 - q1)
    inside = x[(x >= lo) & (x <= hi)]
    return SampleSummary(
        n=x.size,
        minimum=float(x[0]),
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        maximum=float(x[-1]),
        whisker_low=float(inside[0]),
        whisker_high=float(inside[-1]),
        outliers=tuple(float(v) for v in x[(x < lo) | (x > hi)]),
    )
