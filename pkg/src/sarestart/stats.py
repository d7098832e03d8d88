"""Run metrics and the Mann-Whitney U-test used to compare strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "RunSummary",
    "UTestResult",
    "mann_whitney_u",
    "exact_u_distribution",
    "detect_convergence",
    "summarize",
    "SUMMARY_COLUMNS",
]

# Samples up to this many pairs are tested exactly.
EXACT_MAX_PAIRS = 400


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float
    p_value: float
    significant: bool
    method: str


@dataclass(frozen=True)
class RunSummary:
    """One repeat's row of the results table."""

    strategy: str
    seed: int
    convergence_generation: int
    high_f: float
    mean_f: float
    low_f: float
    mean_cr: float
    mean_f_rate: float
    restart_count: int
    converged: bool = True


SUMMARY_COLUMNS = (
    "strategy",
    "seed",
    "convergence_generation",
    "high_f",
    "mean_f",
    "low_f",
    "mean_cr",
    "mean_f_rate",
    "restart_count",
    "converged",
)


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def exact_u_distribution(doubled_ranks: Sequence[int], n1: int) -> np.ndarray:
    """Permutation distribution of the doubled rank sum of an ``n1``-subset.

    Returns ``counts`` where ``counts[s]`` is the number of size-``n1``
    subsets of the pooled ranks whose doubled rank sum equals ``s``.
    Midranks make the doubled ranks integers, so ties are handled exactly.
    """
    ranks = [int(r) for r in doubled_ranks]
    total = sum(ranks)
    counts = np.zeros((n1 + 1, total + 1), dtype=np.int64)
    counts[0, 0] = 1
    for j, r in enumerate(ranks):
        for k in range(min(j + 1, n1), 0, -1):
            counts[k, r:] += counts[k - 1, : total + 1 - r]
    return counts[n1]


def mann_whitney_u(a, b, alpha: float = 0.05, method: str = "auto") -> UTestResult:
    """Two-sided Mann-Whitney U-test of ``a`` against ``b``.

    ``u_statistic`` is U for sample ``a``. With ``method="auto"`` the
    p-value is exact (full permutation distribution, midranks for ties)
    when ``len(a) * len(b) <= 400``, otherwise from the tie-corrected
    normal approximation with continuity correction.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    if method not in ("auto", "exact", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")

    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    mu = n1 * n2 / 2.0

    if np.all(pooled == pooled[0]):
        return UTestResult(u, 1.0, False, "degenerate")

    if method == "auto":
        method = "exact" if n1 * n2 <= EXACT_MAX_PAIRS else "asymptotic"

    if method == "exact":
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        counts = exact_u_distribution(doubled, n1)
        sums = np.nonzero(counts)[0]
        u_values = sums / 2.0 - n1 * (n1 + 1) / 2.0
        dev = np.abs(u_values - mu)
        extreme = dev >= abs(u - mu) - 1e-9
        p = float(counts[sums[extreme]].sum() / counts.sum())
    else:
        n = n1 + n2
        _, tie_counts = np.unique(pooled, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1))
        sigma = math.sqrt(n1 * n2 / 12.0 * ((n + 1) - tie_term))
        z = max(abs(u - mu) - 0.5, 0.0) / sigma
        p = math.erfc(z / math.sqrt(2.0))

    p = min(max(p, 0.0), 1.0)
    return UTestResult(u, p, p < alpha, method)


def detect_convergence(pop) -> bool:
    """True when every member completed both evaluations of the full flight."""
    return len(pop.members) > 0 and all(m.success for m in pop.members)


def summarize(history, strategy: str = "", seed: int = 0) -> RunSummary:
    """Collapse a run's per-generation records into a :class:`RunSummary`.

    Metrics are taken at the last record, which is the convergence
    generation for a converged run (runs stop at convergence).
    """
    if not history:
        raise ValueError("empty history")
    last = history[-1]
    return RunSummary(
        strategy=strategy,
        seed=seed,
        convergence_generation=int(last.generation),
        high_f=float(last.high_f),
        mean_f=float(last.mean_f),
        low_f=float(last.low_f),
        mean_cr=float(last.mean_cr),
        mean_f_rate=float(last.mean_f_rate),
        restart_count=int(sum(len(rec.restart_events) for rec in history)),
        converged=bool(getattr(last, "converged", True)),
    )
