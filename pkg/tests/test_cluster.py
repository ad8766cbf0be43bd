import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shearer.cluster import log_z_series, penrose_coefficient
from shearer.space import SizeLimitError
from shearer.zfun import Phase, classify_phase, critical_lambda

from conftest import brute_penrose, line_space, small_spaces


def _dist(adj):
    adj = np.asarray(adj, dtype=bool)
    return np.where(adj, 0.5, 1.5) * (1 - np.eye(len(adj)))


def test_penrose_examples():
    assert penrose_coefficient(_dist([[0, 1], [1, 0]])) == 1
    assert penrose_coefficient(_dist(np.ones((3, 3)))) == 2
    assert penrose_coefficient(_dist([[0, 1, 0], [1, 0, 1], [0, 1, 0]])) == 1
    assert penrose_coefficient(_dist(np.zeros((3, 3)))) == 0


@pytest.mark.parametrize("n", range(1, 7))
def test_penrose_repeated_atom(n):
    assert penrose_coefficient(np.zeros((n, n))) == math.factorial(n - 1)


def test_penrose_size_limit():
    with pytest.raises(SizeLimitError):
        penrose_coefficient(np.zeros((9, 9)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.booleans(), min_size=n * n, max_size=n * n))))
def test_penrose_matches_edge_enumeration(data):
    n, flags = data
    adj = np.triu(np.array(flags).reshape(n, n), 1)
    adj = adj | adj.T
    assert penrose_coefficient(_dist(adj)) == brute_penrose(adj)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.lists(st.booleans(), min_size=n * n, max_size=n * n), st.permutations(range(n)))))
def test_penrose_relabeling_invariant(data):
    flags, perm = data
    n = len(perm)
    adj = np.triu(np.array(flags).reshape(n, n), 1)
    adj = adj | adj.T
    d = _dist(adj)
    assert penrose_coefficient(d) == penrose_coefficient(d[np.ix_(perm, perm)])


def test_single_atom_series(single):
    s = log_z_series(single, [0.3], ["x"], [], order=6)
    for n, t in enumerate(s.terms, start=1):
        assert t == pytest.approx(0.3 ** n / n, rel=1e-14)
    tail = 0.3 ** 7 / (7 * 0.7)
    assert 0 <= s.exact - s.partial_sums[-1] <= tail


def test_far_singleton_B_changes_nothing():
    sp = line_space([0.0, 0.4, 3.0])
    m = [0.1, 0.2, 0.3]
    with_b = log_z_series(sp, m, ["p0", "p1"], ["p2"], order=4)
    without = log_z_series(sp, m, ["p0", "p1"], [], order=4)
    assert with_b.terms == pytest.approx(without.terms, rel=1e-14)


def test_two_atom_series(pair):
    s = log_z_series(pair, [0.1, 0.1], ["a", "b"], [], order=4)
    assert s.exact == pytest.approx(-math.log(0.8))
    # -log(1 - 2m) has terms (2m)^n / n, so the order-5 tail is bounded geometrically
    tail = 0.2 ** 5 / (5 * 0.8)
    assert 0 <= s.exact - s.partial_sums[-1] <= tail
    n, term, partial, exact = s.rows()[-1]
    assert n == 4 and partial == s.partial_sums[-1] and exact == s.exact


def test_tuple_guard():
    sp = line_space(np.arange(12) * 0.3)
    with pytest.raises(SizeLimitError):
        log_z_series(sp, np.full(12, 0.01), sp.ids, [], order=6, max_tuples=10_000)


def test_divergence_above_critical(path3):
    m = np.ones(3)
    lam = critical_lambda(path3, m)
    below = log_z_series(path3, 0.95 * lam * m, path3.ids, [], order=6).partial_sums[-1]
    above = log_z_series(path3, 1.05 * lam * m, path3.ids, [], order=6).partial_sums[-1]
    assert above > below + 0.1


@settings(max_examples=30, deadline=None)
@given(small_spaces(min_n=1, max_n=4), st.data())
def test_series_nonnegative_and_below_exact(sm, data):
    sp, m = sm
    m = m + 0.01
    m = m * 0.8 * critical_lambda(sp, m)
    assert classify_phase(sp, m).label is Phase.POSITIVE
    A = data.draw(st.integers(0, (1 << sp.n) - 1))
    B = data.draw(st.integers(0, (1 << sp.n) - 1))
    s = log_z_series(sp, m, A, B, order=4)
    assert all(t >= 0 for t in s.terms)
    sums = s.partial_sums
    assert all(a <= b for a, b in itertools.pairwise(sums))
    assert sums[-1] <= s.exact + 1e-12
