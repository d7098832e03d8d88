import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sarestart.de import GenerationStats
from sarestart.stats import mann_whitney_u, summarize


def enumerate_p(a, b):
    """Two-sided permutation p-value of U by listing every relabelling."""
    pooled = np.concatenate([a, b])
    n1 = len(a)

    def u_of(idx):
        xa = pooled[list(idx)]
        xb = np.delete(pooled, list(idx))
        return sum((x > y) + 0.5 * (x == y) for x in xa for y in xb)

    us = [u_of(idx) for idx in itertools.combinations(range(len(pooled)), n1)]
    mu = n1 * len(b) / 2
    obs = abs(u_of(range(n1)) - mu)
    return sum(abs(u - mu) >= obs - 1e-9 for u in us) / len(us), u_of(range(n1))


def test_separated_samples():
    r = mann_whitney_u(range(1, 11), range(11, 21))
    assert r.u_statistic == 0
    assert r.p_value == pytest.approx(2 / math.comb(20, 10), rel=1e-12)
    assert r.significant and r.method == "exact"


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_exact_matches_enumeration_with_ties(n1, n2, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 4, n1).astype(float)
    b = rng.integers(0, 4, n2).astype(float)
    if np.unique(np.concatenate([a, b])).size == 1:
        return
    p, u = enumerate_p(a, b)
    r = mann_whitney_u(a, b, method="exact")
    assert r.u_statistic == u
    assert r.p_value == pytest.approx(p, abs=1e-12)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=12),
       st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=12))
def test_u_symmetry_and_range(a, b):
    if len(set(a + b)) == 1:
        return
    ab = mann_whitney_u(a, b)
    ba = mann_whitney_u(b, a)
    assert ab.u_statistic + ba.u_statistic == len(a) * len(b)
    assert ab.p_value == pytest.approx(ba.p_value)
    assert 0.0 < ab.p_value <= 1.0


def test_identical_samples_not_significant():
    r = mann_whitney_u([3.0] * 5, [3.0] * 5)
    assert r.p_value == 1.0 and not r.significant
    r = mann_whitney_u([1, 2, 3, 4], [1, 2, 3, 4])
    assert r.p_value == 1.0


def test_asymptotic_close_to_exact():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(300):
        a, b = rng.normal(size=10), rng.normal(0.8, size=10)
        ex = mann_whitney_u(a, b, method="exact").p_value
        ap = mann_whitney_u(a, b, method="asymptotic").p_value
        worst = max(worst, abs(ex - ap))
    assert worst < 0.02


def test_large_samples_use_normal_approximation():
    assert mann_whitney_u(range(25), range(5, 30)).method == "asymptotic"


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])


def _rec(g, events=(), converged=False):
    return GenerationStats(g, 10.0 + g, 5.0, 1.0, 0.4, 0.9, events, 20, 0, 0, converged)


def test_summarize_takes_last_generation_and_counts_restarts():
    hist = [_rec(0), _rec(1, ("e",)), _rec(2, ("e", "e")), _rec(3, converged=True)]
    s = summarize(hist, "indiv", 7)
    assert (s.convergence_generation, s.high_f, s.restart_count, s.converged) == (3, 13.0, 3, True)
    with pytest.raises(ValueError):
        summarize([])
