"""Penrose coefficients and the truncated cluster expansion of -log z."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .space import FiniteMetricSpace, RegionSet, SizeLimitError, bits
from .zfun import ZeroDenominator, _masses, z_ratio

__all__ = ["ClusterSeries", "penrose_coefficient", "connected_sum", "log_z_series"]

PENROSE_LIMIT = 8
TUPLE_LIMIT = 2_000_000


def connected_sum(adjacency: np.ndarray) -> int:
    """Sum of (-1)^|E(H)| over connected spanning subgraphs H of the graph.

    Uses the connected-part recursion over vertex subsets: with
    ``T(S) = prod_{edges in S} (1 + (-1))`` (1 iff S spans no edge),
    ``C(S) = T(S) - sum_{v0 in S' < S} C(S') T(S - S')``.
    """
    n = adjacency.shape[0]
    if n == 0:
        return 0
    nbr = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and adjacency[i, j]:
                nbr[i] |= 1 << j

    full = (1 << n) - 1
    edgeless = [False] * (full + 1)
    edgeless[0] = True
    for S in range(1, full + 1):
        low = S & -S
        v = low.bit_length() - 1
        rest = S ^ low
        edgeless[S] = edgeless[rest] and not (nbr[v] & rest)

    conn = [0] * (full + 1)
    for S in range(1, full + 1):
        low = S & -S
        total = 1 if edgeless[S] else 0
        rest = S ^ low
        sub = rest
        # proper subsets S' of S containing the lowest vertex: low | (subset of rest), rest excluded
        while True:
            Sp = low | sub
            if Sp != S and edgeless[S ^ Sp]:
                total -= conn[Sp]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        conn[S] = total
    return conn[full]


def penrose_coefficient(distances, limit: int = PENROSE_LIMIT) -> int:
    """P(x_1..x_n) from the tuple's pairwise distances.

    The graph has an edge where the distance is < 1 (repeated atoms sit at
    distance 0 and are therefore joined).  Returns 0 if disconnected, else the
    magnitude of the connected spanning subgraph sum.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim == 0 or d.size == 0:
        d = d.reshape(0, 0) if d.size == 0 else d.reshape(1, 1)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if n > limit:
        raise SizeLimitError(f"Penrose coefficient limited to {limit} points, got {n}")
    return abs(connected_sum(d < 1.0))


@dataclass
class ClusterSeries:
    A: RegionSet
    B: RegionSet
    order: int
    terms: list = field(default_factory=list)
    exact: float | None = None

    @property
    def partial_sums(self) -> list:
        out, acc = [], 0.0
        for t in self.terms:
            acc += t
            out.append(acc)
        return out

    def rows(self):
        """(n, term, partial_sum, exact) rows for tabular output."""
        return [(k + 1, t, s, self.exact) for k, (t, s) in enumerate(zip(self.terms, self.partial_sums))]


def log_z_series(space: FiniteMetricSpace, measure, A, B, order: int = 6, max_tuples: int = TUPLE_LIMIT) -> ClusterSeries:
    """Terms t_1..t_order of -log z(A, B) from ordered atom tuples.

    t_n = (1/n!) sum over ordered n-tuples of atoms of A u B, not all in B,
    of P(tuple) prod m.  Tuples with repeated atoms are included.
    """
    a, b = space.mask(A), space.mask(B)
    atoms = list(bits(a | b))
    in_b = [bool(b >> i & 1) for i in atoms]
    k = len(atoms)
    if k ** order > max_tuples:
        raise SizeLimitError(f"{k}^{order} ordered tuples exceed the limit {max_tuples}")
    m = _masses(measure)
    dist = space.distances
    cache: dict[tuple, int] = {}

    def coeff(tup) -> int:
        key = tuple(sorted(tup))
        p = cache.get(key)
        if p is None:
            idx = [atoms[j] for j in key]
            p = penrose_coefficient(dist[np.ix_(idx, idx)], limit=max(order, PENROSE_LIMIT))
            cache[key] = p
        return p

    terms = []
    for n in range(1, order + 1):
        acc = []
        for tup in product(range(k), repeat=n):
            if all(in_b[j] for j in tup):
                continue
            w = math.prod(float(m[atoms[j]]) for j in tup)
            if w == 0:
                continue
            p = coeff(tup)
            if p:
                acc.append(p * w)
        terms.append(math.fsum(acc) / math.factorial(n))

    exact = None
    try:
        z = z_ratio(space, m, a, b)
        if z > 0:
            exact = -math.log(z)
    except ZeroDenominator:
        pass
    return ClusterSeries(RegionSet(space, a), RegionSet(space, b), order, terms, exact)
