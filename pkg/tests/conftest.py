import itertools
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from shearer.space import build_space


def line_space(xs, prefix="p"):
    ids = [f"{prefix}{i}" for i in range(len(xs))]
    return build_space(ids, coordinates=np.asarray(xs, dtype=float)[:, None])


@pytest.fixture
def pair():
    return build_space(["a", "b"], [[0, 0.5], [0.5, 0]])


@pytest.fixture
def path3():
    return build_space(["a", "b", "c"], [[0, 0.5, 1.0], [0.5, 0, 0.5], [1.0, 0.5, 0]])


@pytest.fixture
def single():
    return build_space(["x"], [[0.0]])


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


# ---------------------------------------------------------------- oracles
# Written against the raw distance matrix so they share no code with the package.


def brute_Z(d, m, subset=None):
    """Signed sum over subsets with all pairwise distances >= 1."""
    n = len(m)
    pts = range(n) if subset is None else subset
    pts = list(pts)
    total = 0.0
    for r in range(len(pts) + 1):
        for I in itertools.combinations(pts, r):
            if all(d[i][j] >= 1 for i, j in itertools.combinations(I, 2)):
                total += math.prod(-m[i] for i in I)
    return total


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def brute_kappa(d, pts):
    pts = list(pts)
    if not pts:
        return 0
    best = len(pts)
    for part in set_partitions(pts):
        if all(d[i][j] < 1 for blk in part for i, j in itertools.combinations(blk, 2)):
            best = min(best, len(part))
    return best


def brute_penrose(adj):
    """|sum over connected spanning edge subsets of (-1)^|E||, by edge enumeration."""
    n = len(adj)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if adj[i][j]]
    total = 0
    for r in range(len(edges) + 1):
        for E in itertools.combinations(edges, r):
            parent = list(range(n))

            def find(a):
                while parent[a] != a:
                    a = parent[a]
                return a

            for i, j in E:
                parent[find(i)] = find(j)
            if len({find(i) for i in range(n)}) == 1:
                total += (-1) ** r
    return abs(total)


# ---------------------------------------------------------------- strategies


@st.composite
def small_spaces(draw, min_n=1, max_n=7):
    """Explicit spaces with distances in [0.55, 1.1] (always metric) and masses."""
    n = draw(st.integers(min_n, max_n))
    vals = draw(st.lists(st.floats(0.55, 1.1), min_size=n * n, max_size=n * n))
    d = np.array(vals).reshape(n, n)
    d = np.triu(d, 1)
    d = d + d.T
    m = np.array(draw(st.lists(st.floats(0.0, 1.0, allow_subnormal=False), min_size=n, max_size=n)))
    return build_space([f"p{i}" for i in range(n)], d), m
