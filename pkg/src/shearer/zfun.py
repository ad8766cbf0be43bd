"""The hard-core generating function Z on finite spaces.

On an atomic space the alternating tuple integral collapses to a signed
independent-set sum,

    Z(S, M) = sum over unit-graph independent I in S of prod_{x in I} (-m_x),

evaluated here either by the deletion recursion
``Z(S) = Z(S - x) - m_x Z(S - U(x))`` (memoised over bitmasks, lowest index
pivot) or by direct enumeration of independent sets.  The enumeration path is
the brute-force oracle for the recursion.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .space import (
    AtomicMeasure,
    FiniteMetricSpace,
    GridRegion,
    RegionSet,
    SizeLimitError,
    bits,
)

__all__ = [
    "AtomicMeasure",
    "ZeroDenominator",
    "Phase",
    "PhaseLabel",
    "z_exact",
    "z_ratio",
    "z_table",
    "z_polynomial",
    "classify_phase",
    "critical_lambda",
    "critical_bracket",
    "delta_Z",
    "iterated_difference",
    "mc_estimate_Z",
    "hard_sphere_partition",
    "hardcore_moment",
    "independent_sets",
]

RECURSION_LIMIT = 24
ENUMERATION_LIMIT = 20
TABLE_LIMIT = 24


class ZeroDenominator(ArithmeticError):
    """Z(B) <= 0 in a ratio: B lies outside the strictly positive phase."""


class Phase(enum.Enum):
    EMPTY = "EMPTY"
    ZERO = "ZERO"
    SH_BOUNDARY = "SH_BOUNDARY"
    POSITIVE = "POSITIVE"


@dataclass(frozen=True)
class PhaseLabel:
    label: Phase
    witness: RegionSet | None = None
    value: float | None = None

    def as_dict(self) -> dict:
        return {
            "label": self.label.value,
            "witness": None if self.witness is None else list(self.witness.ids),
            "value": self.value,
        }


class _ZEvaluator:
    """Memoised deletion recursion for one (space, masses) pair.

    ``masses`` may be negative, which turns Z into the hard-sphere
    partition function.  The cache lives as long as the evaluator.
    """

    def __init__(self, space: FiniteMetricSpace, masses):
        self.unit = space.unit_masks
        self.m = [float(v) for v in masses]
        self.memo = {0: 1.0}

    def __call__(self, S: int) -> float:
        v = self.memo.get(S)
        if v is not None:
            return v
        low = S & -S
        x = low.bit_length() - 1
        rest = S ^ low
        v = self(rest)
        if self.m[x]:
            v -= self.m[x] * self(rest & ~self.unit[x])
        self.memo[S] = v
        return v


def _masses(measure) -> np.ndarray:
    return measure.masses if isinstance(measure, AtomicMeasure) else np.asarray(measure, dtype=float)


def _check_width(mask: int, limit: int, what: str):
    size = mask.bit_count()
    if size > limit:
        raise SizeLimitError(f"{what} limited to {limit} points, region has {size}")


def independent_sets(space: FiniteMetricSpace, mask: int):
    """Yield every unit-graph independent subset of ``mask`` (as bitmasks), the empty set first."""
    near = space.neighbor_masks
    order = list(bits(mask))

    def grow(start: int, current: int, blocked: int):
        yield current
        for k in range(start, len(order)):
            v = order[k]
            if not (blocked >> v) & 1:
                yield from grow(k + 1, current | (1 << v), blocked | near[v])

    yield from grow(0, 0, 0)


def _z_enumerate(space, masses, mask) -> float:
    terms = []
    for I in independent_sets(space, mask):
        t = 1.0
        for i in bits(I):
            t *= -masses[i]
        terms.append(t)
    return math.fsum(terms)


def z_exact(
    space: FiniteMetricSpace,
    measure,
    region=None,
    method: str = "recursion",
    max_points: int | None = None,
) -> float:
    """Z(region, M) by the memoised recursion or by independent-set enumeration."""
    mask = space.mask(region)
    m = _masses(measure)
    if method == "recursion":
        _check_width(mask, max_points or RECURSION_LIMIT, "recursion")
        return _ZEvaluator(space, m)(mask)
    if method == "enumeration":
        _check_width(mask, max_points or ENUMERATION_LIMIT, "enumeration")
        return _z_enumerate(space, m, mask)
    raise ValueError(f"unknown method {method!r}")


def z_ratio(space: FiniteMetricSpace, measure, A, B, max_points: int | None = None) -> float:
    """z(A, B) = Z(A u B) / Z(B); raises ZeroDenominator unless Z(B) > 0."""
    a, b = space.mask(A), space.mask(B)
    _check_width(a | b, max_points or RECURSION_LIMIT, "recursion")
    ev = _ZEvaluator(space, _masses(measure))
    zb = ev(b)
    if not zb > 0:
        raise ZeroDenominator(f"Z(B) = {zb!r} is not positive for B = {list(space.ids_of(b))}")
    return ev(a | b) / zb


def z_table(space: FiniteMetricSpace, measure, max_points: int = TABLE_LIMIT) -> np.ndarray:
    """Z on every subset of the space, indexed by bitmask.

    Built bit by bit with the highest index as pivot, so each new half of the
    table is one vectorised update of the lower half.
    """
    n = space.n
    if n > max_points:
        raise SizeLimitError(f"subset table limited to {max_points} points, space has {n}")
    m = _masses(measure)
    table = np.empty(1 << n)
    table[0] = 1.0
    for i in range(n):
        half = 1 << i
        lower = table[:half]
        keep = ~space.unit_masks[i] & (half - 1)
        table[half : 2 * half] = lower - m[i] * lower[np.arange(half) & keep]
    return table


def z_polynomial(space: FiniteMetricSpace, measure, region=None, max_points: int | None = None) -> np.ndarray:
    """Coefficients c_k (increasing powers) of lambda -> Z(region, lambda M)."""
    mask = space.mask(region)
    _check_width(mask, max_points or RECURSION_LIMIT, "recursion")
    m = [float(v) for v in _masses(measure)]
    unit = space.unit_masks
    memo: dict[int, np.ndarray] = {0: np.ones(1)}

    def poly(S: int) -> np.ndarray:
        p = memo.get(S)
        if p is not None:
            return p
        low = S & -S
        x = low.bit_length() - 1
        rest = S ^ low
        a = poly(rest)
        if m[x]:
            b = poly(rest & ~unit[x])
            out = np.zeros(max(len(a), len(b) + 1))
            out[: len(a)] += a
            out[1 : len(b) + 1] -= m[x] * b
            a = out
        memo[S] = a
        return a

    return poly(mask)


def hardcore_moment(space: FiniteMetricSpace, measure, region, order: int) -> float:
    """Integral of h_n over B^n: n! times the weighted count of independent n-sets.

    This is the factorial moment of order ``n`` of Shearer's process.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    c = z_polynomial(space, measure, region)
    if order >= len(c):
        return 0.0
    return math.factorial(order) * (-1) ** order * float(c[order])


def hard_sphere_partition(space: FiniteMetricSpace, measure, region=None, max_points: int | None = None) -> float:
    """Z(region, -M): the all-positive independent-set sum, always >= 1."""
    mask = space.mask(region)
    _check_width(mask, max_points or RECURSION_LIMIT, "recursion")
    return _ZEvaluator(space, -_masses(measure))(mask)


def classify_phase(space: FiniteMetricSpace, measure, tol: float = 1e-12, max_points: int = TABLE_LIMIT) -> PhaseLabel:
    """Place a finite atomic measure in one of the four phases.

    Subsets are scanned in colex order (increasing bitmask).  A value
    counts as zero when ``|Z(S)| <= tol * Z(S, -M)``, the scale of the
    cancelling sum, so that boundary measures such as two near atoms of mass
    1/2 are recognised despite rounding.
    """
    m = _masses(measure)
    over = np.flatnonzero(m > 1.0)
    if len(over):
        i = int(over[0])
        return PhaseLabel(Phase.EMPTY, RegionSet(space, 1 << i), float(m[i]))
    table = z_table(space, m, max_points=max_points)
    scale = z_table(space, -m, max_points=max_points)
    slack = tol * scale
    negative = np.flatnonzero(table < -slack)
    if len(negative):
        S = int(negative[0])
        return PhaseLabel(Phase.ZERO, RegionSet(space, S), float(table[S]))
    zero = np.flatnonzero(table <= slack)
    if len(zero):
        S = int(zero[0])
        return PhaseLabel(Phase.SH_BOUNDARY, RegionSet(space, S), float(table[S]))
    return PhaseLabel(Phase.POSITIVE)


def critical_bracket(space: FiniteMetricSpace, measure, region=None, tol: float = 1e-10, steps: int = 1000):
    """(lo, hi) with Z(region, lo M) > 0 >= Z(region, hi M) and hi - lo <= tol.

    lambda_B never exceeds 1/m_x for an atom x in B, so the scan covers
    [0, 1/max m] at resolution 1e-3 of that range; the first sign change is
    then bisected.  The width is capped below by float resolution, so for
    large lambda the bracket is relative rather than absolute.  When Z
    touches zero without changing sign (a tangential root, or a root at
    1/max m lost to rounding) the root finder's value r is returned as (r, r).
    """
    mask = space.mask(region)
    m = _masses(measure)
    top = max((float(m[i]) for i in bits(mask)), default=0.0)
    if top <= 0:
        raise ValueError("critical lambda needs a region of positive mass")
    if not math.isfinite(1.0 / top):
        raise ValueError(f"largest mass {top} is too small for its critical lambda to be a float")
    # work in t = lambda * max m, so the scan always covers [0, 1]
    u = m / top
    coef = z_polynomial(space, u, mask)
    size = np.abs(coef)
    t_tol = tol * top

    def exact(t):
        # the recursion keeps products of far factors accurate near multiple roots
        return _ZEvaluator(space, t * u)(mask)

    def bisect(lo, hi):
        while hi - lo > t_tol:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if exact(mid) > 0:
                lo = mid
            else:
                hi = mid
        return lo / top, hi / top

    # the expanded polynomial is cheap but only locates the root to rounding noise
    grid = np.linspace(0.0, 1.0, steps + 1)
    poly = np.polynomial.polynomial
    near = np.flatnonzero(poly.polyval(grid, coef) <= 1e-12 * poly.polyval(grid, size))
    for k in near:
        t = float(grid[k])
        if exact(t) <= 0:
            j = k
            while j > 0 and exact(float(grid[j - 1])) <= 0:
                j -= 1
            if j == 0:
                return 0.0, 0.0
            return bisect(float(grid[j - 1]), float(grid[j]))
    # no sign change: Z touches zero at a tangential root or at t = 1
    roots = np.roots(coef[::-1])
    cand = sorted(r.real for r in roots if abs(r.imag) < 1e-3 and 0 < r.real <= 1 + 1e-3)
    r = min(cand[0], 1.0) if cand else 1.0
    lo, hi = max(r - 1e-3, 0.0), min(r + 1e-3, 1.0)
    # golden-section search for the touching point of a non-negative Z
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    while b - a > t_tol:
        c, d = b - g * (b - a), a + g * (b - a)
        if c in (a, b) or d in (a, b):
            break
        if exact(c) <= exact(d):
            b = d
        else:
            a = c
    root = 0.5 * (a + b) / top
    return root, root


def critical_lambda(space: FiniteMetricSpace, measure, region=None, tol: float = 1e-10) -> float:
    """Smallest lambda with Z(region, lambda M) = 0, to absolute tolerance ``tol``."""
    lo, hi = critical_bracket(space, measure, region, tol=tol)
    return 0.5 * (lo + hi)


def delta_Z(space: FiniteMetricSpace, measure, A_list, B, max_points: int | None = None) -> float:
    """Iterated set-difference operator in canonical form.

    sum over I subset of [n] of (-1)^|I| Z(B u union_{i in I} A_i).
    """
    masks = [space.mask(A) for A in A_list]
    b = space.mask(B)
    union = b
    for a in masks:
        union |= a
    _check_width(union, max_points or RECURSION_LIMIT, "recursion")
    ev = _ZEvaluator(space, _masses(measure))
    terms = []
    for r in range(len(masks) + 1):
        for I in combinations(range(len(masks)), r):
            S = b
            for i in I:
                S |= masks[i]
            terms.append((-1) ** r * ev(S))
    return math.fsum(terms)


def iterated_difference(phi, A_list, B):
    """Apply Delta(A_1)(...(Delta(A_n) phi)...) at B literally, by nesting.

    ``phi`` maps an int bitmask to a float.  This is the operator definition
    itself, kept separate from the canonical sum in :func:`delta_Z`.
    """
    if not A_list:
        return phi(B)
    *head, last = A_list

    def inner(S):
        return phi(S) - phi(S | last)

    return iterated_difference(inner, head, B)


def _box(box):
    if isinstance(box, GridRegion):
        return np.asarray(box.lower), np.asarray(box.upper)
    lower, upper = box
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape or np.any(upper <= lower):
        raise ValueError("invalid box")
    return lower, upper


def _hard_core_rows(points: np.ndarray) -> np.ndarray:
    """For an array (count, k, d) of configurations, True where all pairs are >= 1 apart."""
    k = points.shape[1]
    if k < 2:
        return np.ones(points.shape[0], dtype=bool)
    ok = np.ones(points.shape[0], dtype=bool)
    for i in range(k - 1):
        diff = points[:, i + 1 :, :] - points[:, i : i + 1, :]
        d2 = np.einsum("nkd,nkd->nk", diff, diff)
        ok &= np.all(d2 >= 1.0, axis=1)
    return ok


MC_CHUNK = 8192


def mc_estimate_Z(box, lam: float, n_samples: int, seed: int = 0):
    """Unbiased Poisson-functional estimate of Z(box, lam * Lebesgue).

    Returns ``(estimate, standard_error)`` of e^{M(B)} mean[(-1)^N h(X)],
    where N ~ Poisson(M(B)), the points are uniform in the box and h flags a
    1-hard-core draw.  Each block of draws uses its own spawned substream.
    """
    lower, upper = _box(box)
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if lam < 0:
        raise ValueError("intensity must be non-negative")
    vol = float(np.prod(upper - lower))
    mu = lam * vol
    if mu > 5:
        warnings.warn(f"M(B) = {mu:.3g} > 5: estimator variance grows like e^(2 M(B))", RuntimeWarning)
    if mu == 0:
        return 1.0, 0.0
    values = np.empty(n_samples)
    n_chunks = -(-n_samples // MC_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    d = len(lower)
    for c, ss in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(ss))
        start = c * MC_CHUNK
        size = min(MC_CHUNK, n_samples - start)
        counts = rng.poisson(mu, size=size)
        h = np.ones(size)
        for k in np.unique(counts):
            if k < 2:
                continue
            rows = np.flatnonzero(counts == k)
            pts = rng.uniform(lower, upper, size=(len(rows), int(k), d))
            h[rows] = _hard_core_rows(pts)
        values[start : start + size] = np.where(counts % 2 == 0, 1.0, -1.0) * h
    scale = math.exp(mu)
    est = scale * float(values.mean())
    se = scale * float(values.std(ddof=1)) / math.sqrt(n_samples) if n_samples > 1 else 0.0
    return est, se
