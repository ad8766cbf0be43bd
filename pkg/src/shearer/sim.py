"""Samplers for 1-dependent and hard-core point processes on atomic spaces, and
empirical statistics over their draws.

Batch samplers return boolean arrays of shape ``(size, n)``; row ``k`` is one
occupancy outcome with column ``i`` for ``space.ids[i]``.  Randomness comes
from numpy's PCG64, one spawned substream per chunk of ``MC_CHUNK`` draws, so
results depend only on ``(inputs, seed, size)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Callable

import numpy as np

from .space import FiniteMetricSpace, RegionSet, bits
from .zfun import (
    MC_CHUNK,
    TABLE_LIMIT,
    Phase,
    ZeroDenominator,
    _box,
    _hard_core_rows,
    _masses,
    classify_phase,
    critical_bracket,
    hard_sphere_partition,
    z_table,
)

__all__ = [
    "RNG_NAME",
    "PointConfiguration",
    "BinaryField",
    "QueryKind",
    "Query",
    "Estimate",
    "SampleReport",
    "sample_zero_dependent",
    "sample_shearer",
    "sample_matern",
    "matern_target_intensity_path3",
    "matern_exact_intensities",
    "sample_hard_sphere",
    "HardSphereRun",
    "hard_sphere_run",
    "thin_field",
    "thinned",
    "construct_zero_phase",
    "ZeroPhaseField",
    "make_sampler",
    "empirical_stats",
]

RNG_NAME = "numpy.PCG64 (SeedSequence.spawn per chunk)"


def _chunks(seed: int, size: int, salt: int = 0):
    """(generator, count) pairs covering ``size`` draws."""
    if size < 0:
        raise ValueError("size must be non-negative")
    n_chunks = max(1, -(-size // MC_CHUNK))
    children = np.random.SeedSequence([int(seed), int(salt)]).spawn(n_chunks)
    left = size
    for ss in children:
        k = min(MC_CHUNK, left)
        left -= k
        yield np.random.Generator(np.random.PCG64(ss)), k


def _stack(parts, n):
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, n), dtype=bool)


# ---------------------------------------------------------------- data types


@dataclass
class PointConfiguration:
    """Points with multiplicities; locations are ids or coordinate tuples."""

    points: list
    is_simple: bool
    is_hard_core: bool

    @classmethod
    def from_counts(cls, space: FiniteMetricSpace, counts) -> "PointConfiguration":
        counts = np.asarray(counts, dtype=int)
        occ = np.flatnonzero(counts)
        pts = [(space.ids[i], int(counts[i])) for i in occ]
        simple = bool(np.all(counts <= 1))
        mask = sum(1 << int(i) for i in occ)
        return cls(pts, simple, simple and space.is_independent(mask))

    @classmethod
    def from_coordinates(cls, coords) -> "PointConfiguration":
        x = np.asarray(coords, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        pts = [(tuple(float(v) for v in row), 1) for row in x]
        if len(x) < 2:
            return cls(pts, True, True)
        d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
        off = d[~np.eye(len(x), dtype=bool)]
        simple = bool(np.all(off > 0))
        return cls(pts, simple, bool(np.all(off >= 1.0)))

    def __len__(self):
        return sum(k for _, k in self.points)


@dataclass
class BinaryField:
    space: FiniteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=bool)
        if v.shape != (self.space.n,):
            raise ValueError(f"field needs {self.space.n} values, got shape {v.shape}")
        self.values = v

    def __getitem__(self, x) -> int:
        return int(self.values[self.space.index(x)])

    @property
    def occupied(self) -> RegionSet:
        return RegionSet(self.space, sum(1 << int(i) for i in np.flatnonzero(self.values)))

    def as_dict(self) -> dict:
        return {x: int(v) for x, v in zip(self.space.ids, self.values)}


def _single(space, rows, size):
    return BinaryField(space, rows[0]) if size is None else rows


def _check_masses(m, what="mass"):
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise ValueError(f"{what} values must be finite and non-negative")


# ---------------------------------------------------------------- 0-dependent


def sample_zero_dependent(space: FiniteMetricSpace, measure, seed: int = 0, size: int | None = None):
    """Independent occupancy per atom with probability m_x; mass-1 atoms always occupied."""
    m = _masses(measure)
    _check_masses(m)
    over = np.flatnonzero(m > 1)
    if len(over):
        raise ValueError(f"atom {space.ids[over[0]]!r} has mass {m[over[0]]} > 1; no such field exists")
    k = 1 if size is None else size
    parts = [rng.random((c, space.n)) < m for rng, c in _chunks(seed, k)]
    return _single(space, _stack(parts, space.n), size)


# ---------------------------------------------------------------- Shearer


def _shearer_rows(table, m, unit, full, rng, k):
    n = len(m)
    W = np.full(k, full, dtype=np.int64)
    E = np.zeros(k, dtype=np.int64)
    out = np.zeros((k, n), dtype=bool)
    for x in range(n):
        u = ~np.int64(unit[x])
        bit = np.int64(1 << x)
        draws = rng.random(k)
        live = (W & bit) != 0
        if not live.any():
            continue
        idx = np.flatnonzero(live)
        e = E[idx]
        ze = table[e]
        if np.any(ze <= 0):
            raise ZeroDenominator("Z of the decided-empty set vanished; measure is not in the positive phase")
        p = np.clip(m[x] * table[e & u] / ze, 0.0, 1.0)
        occ = draws[idx] < p
        on, off = idx[occ], idx[~occ]
        out[on, x] = True
        W[on] &= u
        E[on] &= u
        E[off] |= bit
    return out


def sample_shearer(space: FiniteMetricSpace, measure, seed: int = 0, size: int | None = None,
                   max_points: int = TABLE_LIMIT):
    """Exact sequential sampler for the 1-dependent, 1-hard-core field with avoidance function Z.

    Atoms are visited in index order with an active set W and a set E of
    atoms already decided empty.  An active atom x is occupied with
    probability ``m_x Z(E minus U(x)) / Z(E)``.  On occupation U(x) leaves
    both W and E; otherwise x joins E.
    """
    m = _masses(measure)
    _check_masses(m)
    table = z_table(space, m, max_points=max_points)
    if np.any(table < 0):
        # some step would need a probability above 1
        raise ZeroDenominator("Z is negative on a subset; measure is outside the positive phase")
    unit = space.unit_masks
    full = space.full_mask
    k = 1 if size is None else size
    parts = [_shearer_rows(table, m, unit, full, rng, c) for rng, c in _chunks(seed, k)]
    return _single(space, _stack(parts, space.n), size)


# ---------------------------------------------------------------- Matern


def _matern_rows(near_lists, occ, marks, variant):
    n = occ.shape[1]
    if variant == "I":
        keep = occ.copy()
        for x in range(n):
            nb = near_lists[x]
            if nb:
                keep[:, x] &= ~occ[:, nb].any(axis=1)
        return keep

    def survivors(alive):
        out = occ.copy()
        for x in range(n):
            nb = near_lists[x]
            if nb:
                beaten = alive[:, nb] & (marks[:, nb] < marks[:, [x]])
                out[:, x] &= ~beaten.any(axis=1)
        return out

    if variant == "II":
        return survivors(occ)
    if variant == "III":
        cur = occ
        for _ in range(n + 2):
            nxt = survivors(cur)
            if np.array_equal(nxt, cur):
                return cur
            cur = nxt
        raise RuntimeError("inhibition did not stabilise")
    raise ValueError(f"unknown Matern variant {variant!r}")


def sample_matern(space: FiniteMetricSpace, underlying, variant: str, seed: int = 0, size: int | None = None):
    """Hard-core thinning of a product Bernoulli field with iid uniform marks.

    I: delete every occupied atom with an occupied unit neighbour.
    II: delete an occupied atom when an occupied neighbour has a smaller mark.
    III: repeat the II rule using only surviving atoms as inhibitors until
    nothing changes.
    """
    n_int = _masses(underlying)
    _check_masses(n_int, "underlying intensity")
    if np.any(n_int > 1):
        raise ValueError("underlying intensities must lie in [0, 1]")
    variant = str(variant).upper()
    if variant not in ("I", "II", "III"):
        raise ValueError(f"unknown Matern variant {variant!r}")
    near = space.neighbor_masks
    near_lists = [list(bits(near[x])) for x in range(space.n)]
    k = 1 if size is None else size
    parts = []
    for rng, c in _chunks(seed, k):
        occ = rng.random((c, space.n)) < n_int
        marks = rng.random((c, space.n))
        parts.append(_matern_rows(near_lists, occ, marks, variant))
    return _single(space, _stack(parts, space.n), size)


def matern_target_intensity_path3(variant: str, n1: float, n2: float, n3: float):
    """Closed-form intensities on the 3-path as stated in the non-Matern argument.

    Variant II's middle value and variant III's end values use a
    coin-independence shortcut and differ from the exact thinning law; see
    :func:`matern_exact_intensities` for the exact values.
    """
    for v in (n1, n2, n3):
        if not 0 <= v <= 1:
            raise ValueError("intensities must lie in [0, 1]")
    variant = str(variant).upper()
    if variant == "I":
        return n1 * (1 - n2), (1 - n1) * n2 * (1 - n3), (1 - n2) * n3
    if variant == "II":
        return n1 * (1 - n2 / 2), n2 * (1 - n1 / 4) * (1 - n3 / 4), n3 * (1 - n2 / 2)
    if variant == "III":
        # the middle value is not given in closed form there; use the exact one
        mid = matern_exact_intensities(_path3(), (n1, n2, n3), "III")[1]
        return n1 * (1 - n2 / 2 + n2 * n3 / 4), float(mid), n3 * (1 - n2 / 2 + n2 * n1 / 4)
    raise ValueError(f"unknown Matern variant {variant!r}")


def _path3():
    from .space import build_space

    return build_space(["1", "2", "3"], [[0, 0.5, 1.0], [0.5, 0, 0.5], [1.0, 0.5, 0]])


def _matern_keep_one(near, occupied: list, rank: dict, variant: str) -> set:
    """Apply one thinning rule to a single configuration with mark ranks."""
    occ = set(occupied)
    if variant == "I":
        return {x for x in occ if not any(y in occ for y in near[x])}
    if variant == "II":
        return {x for x in occ if not any(y in occ and rank[y] < rank[x] for y in near[x])}
    # III: lowest mark first, keep unless a kept neighbour precedes it
    kept: set = set()
    for x in sorted(occ, key=rank.__getitem__):
        if not any(y in kept for y in near[x]):
            kept.add(x)
    return kept


def matern_exact_intensities(space: FiniteMetricSpace, underlying, variant: str) -> np.ndarray:
    """Exact retained intensities by enumerating occupancy patterns and mark orders.

    Marks are iid continuous, so every ordering of the occupied atoms is
    equally likely.  Feasible for about 8 atoms.
    """
    n_int = _masses(underlying)
    n = space.n
    if n > 9:
        raise ValueError("exact Matern enumeration limited to 9 atoms")
    variant = str(variant).upper()
    near = [set(bits(space.neighbor_masks[x])) for x in range(n)]
    out = np.zeros(n)
    for pattern in product((0, 1), repeat=n):
        occupied = [i for i in range(n) if pattern[i]]
        w = math.prod(n_int[i] if pattern[i] else 1 - n_int[i] for i in range(n))
        if w == 0:
            continue
        orders = list(permutations(occupied))
        for order in orders:
            rank = {x: r for r, x in enumerate(order)}
            for x in _matern_keep_one(near, occupied, rank, variant):
                out[x] += w / len(orders)
    return out


# ---------------------------------------------------------------- hard sphere


@dataclass
class HardSphereRun:
    """Outcome of a fixed number of rejection attempts."""

    accepted: np.ndarray
    counts: np.ndarray
    total_mass: float
    seed: int

    @property
    def n_attempts(self) -> int:
        return len(self.accepted)

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())

    def partition_estimate(self):
        """(estimate, stderr) of Z(B, -M) = exp(M(B)) * acceptance rate."""
        p = self.acceptance_rate
        scale = math.exp(self.total_mass)
        return scale * p, scale * math.sqrt(p * (1 - p) / self.n_attempts)

    def empty_frequency(self):
        """(frequency, stderr) of the empty configuration among accepted draws."""
        c = self.counts[self.accepted]
        if len(c) == 0:
            raise ValueError("no accepted draws")
        p = float(np.mean(c == 0))
        return p, math.sqrt(p * (1 - p) / len(c))


def _atomic_attempts(space, m, rng, k):
    counts = rng.poisson(m, size=(k, space.n))
    ok = counts.max(axis=1, initial=0) <= 1
    occ = counts > 0
    for i, j in space.unit_graph_edges(as_index=True):
        ok &= ~(occ[:, i] & occ[:, j])
    return ok, counts


def _continuum_attempts(lower, upper, lam, rng, k):
    vol = float(np.prod(upper - lower))
    num = rng.poisson(lam * vol, size=k)
    ok = np.ones(k, dtype=bool)
    d = len(lower)
    for c in np.unique(num):
        if c < 2:
            continue
        rows = np.flatnonzero(num == c)
        pts = lower + (upper - lower) * rng.random((len(rows), int(c), d))
        ok[rows] = _hard_core_rows(pts)
    return ok, num


def _hs_target(target, fugacity):
    if isinstance(target, FiniteMetricSpace):
        m = _masses(fugacity)
        _check_masses(m, "fugacity")
        return "atomic", m, float(m.sum())
    lower, upper = _box(target)
    lam = float(fugacity)
    if lam < 0:
        raise ValueError("fugacity must be non-negative")
    return "continuum", (lower, upper, lam), lam * float(np.prod(upper - lower))


def hard_sphere_run(target, fugacity, n_attempts: int, seed: int = 0) -> HardSphereRun:
    """Run ``n_attempts`` Poisson draws and record which are 1-hard-core.

    ``target`` is a FiniteMetricSpace (fugacity = per-atom masses) or a box
    (GridRegion or ``(lower, upper)``, fugacity = Lebesgue density).
    """
    if n_attempts <= 0:
        raise ValueError("n_attempts must be positive")
    kind, par, total = _hs_target(target, fugacity)
    acc, cnt = [], []
    for rng, c in _chunks(seed, n_attempts, salt=7):
        if kind == "atomic":
            ok, counts = _atomic_attempts(target, par, rng, c)
            counts = counts.sum(axis=1)
        else:
            ok, counts = _continuum_attempts(*par, rng, c)
        acc.append(ok)
        cnt.append(counts)
    return HardSphereRun(np.concatenate(acc), np.concatenate(cnt), total, seed)


def sample_hard_sphere(target, fugacity, seed: int = 0, max_attempts: int = 1_000_000):
    """One draw of the Poisson process conditioned to be 1-hard-core, by rejection.

    Returns ``(PointConfiguration, attempts_used)``.
    """
    kind, par, total = _hs_target(target, fugacity)
    if kind == "atomic":
        accept = math.exp(-total) * hard_sphere_partition(target, par, max_points=64)
        if accept < 1e-3:
            warnings.warn(f"acceptance probability {accept:.3g} is small", RuntimeWarning, stacklevel=2)
    used = 0
    for rng, c in _chunks(seed, max_attempts, salt=7):
        for _ in range(c):
            used += 1
            if kind == "atomic":
                ok, counts = _atomic_attempts(target, par, rng, 1)
                if ok[0]:
                    return PointConfiguration.from_counts(target, counts[0]), used
            else:
                lower, upper, lam = par
                num = rng.poisson(lam * float(np.prod(upper - lower)))
                pts = lower + (upper - lower) * rng.random((num, len(lower)))
                if num < 2 or _hard_core_rows(pts[None])[0]:
                    return PointConfiguration.from_coordinates(pts), used
    raise RuntimeError(f"no hard-core draw within {max_attempts} attempts")


def _hard_sphere_fields(space, m, seed, size):
    """``size`` accepted atomic draws as occupancy rows."""
    parts, got = [], 0
    salt = 11
    while got < size:
        for rng, c in _chunks(seed, max(size - got, 1), salt=salt):
            ok, counts = _atomic_attempts(space, m, rng, c)
            rows = counts[ok] > 0
            parts.append(rows)
            got += len(rows)
        salt += 1
    return _stack(parts, space.n)[:size]


# ---------------------------------------------------------------- thinning


def _p_vector(space, p_map):
    if isinstance(p_map, dict):
        p = np.array([float(p_map.get(x, 1.0)) for x in space.ids])
    else:
        p = np.broadcast_to(np.asarray(p_map, dtype=float), (space.n,)).copy()
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError("retention probabilities must lie in [0, 1]")
    return p


def thin_field(space: FiniteMetricSpace, fields, p_map, seed: int = 0):
    """Keep each occupied atom independently with probability p(x)."""
    p = _p_vector(space, p_map)
    if isinstance(fields, BinaryField):
        rows = fields.values[None]
        single = True
    else:
        rows = np.asarray(fields, dtype=bool)
        single = False
    parts, start = [], 0
    for rng, c in _chunks(seed, len(rows), salt=3):
        block = rows[start:start + c]
        parts.append(block & (rng.random(block.shape) < p))
        start += c
    out = _stack(parts, space.n)
    return BinaryField(space, out[0]) if single else out


def thinned(sampler: Callable, space: FiniteMetricSpace, p_map) -> Callable:
    """Sampler ``(size, seed)`` that draws from ``sampler`` and then thins."""

    def draw(size: int, seed: int = 0):
        return thin_field(space, sampler(size, seed), p_map, seed)

    return draw


# ---------------------------------------------------------------- zero phase


@dataclass
class ZeroPhaseField:
    """Parameters of the superposition field built for a measure outside the positive phase."""

    witness: RegionSet
    Lambda: float
    bracket: tuple
    deterministic: bool
    fresh: np.ndarray = field(repr=False)


def _zero_phase_plan(space, measure) -> ZeroPhaseField:
    m = _masses(measure)
    _check_masses(m)
    label = classify_phase(space, m)
    if label.label is Phase.EMPTY:
        raise ValueError(f"an atom has mass > 1 at {label.witness.ids}; no 1-dependent field exists")
    ones = np.flatnonzero(m == 1.0)
    if len(ones):
        w = RegionSet(space, 1 << int(ones[0]))
        return ZeroPhaseField(w, 1.0, (1.0, 1.0), True, np.zeros(0))
    if label.label is Phase.POSITIVE:
        raise ValueError("measure is in the positive phase; no vanishing avoidance probability to build")
    B = label.witness
    lo, hi = critical_bracket(space, m, B.mask)
    lam = 0.5 * (lo + hi)
    mb = m[[i for i in bits(B.mask)]]
    fresh = (1 - lo) * mb / (1 - lo * mb)
    return ZeroPhaseField(B, lam, (lo, hi), False, fresh)


def construct_zero_phase(space: FiniteMetricSpace, measure, seed: int = 0, size: int | None = None):
    """1-dependent field with intensity M whose avoidance probability vanishes on a witness.

    Outside the witness B the atoms are independent Bernoulli(m).  On B the
    field is the union of the Shearer field at Lambda M restricted to B and
    independent Bernoulli atoms with mass (1 - Lambda) m / (1 - Lambda m),
    where Lambda is the critical scaling of B.  Lambda is taken at the lower
    end of its bisection bracket so the Shearer part stays well defined.
    Returns ``(fields, plan)``.
    """
    m = _masses(measure)
    plan = _zero_phase_plan(space, m)
    k = 1 if size is None else size
    if plan.deterministic:
        rows = sample_zero_dependent(space, m, seed, k)
        return _single(space, rows, size), plan
    B = plan.witness.mask
    idx = list(bits(B))
    sub = space.subspace(B)
    lo = plan.bracket[0]
    parts = []
    for rng, c in _chunks(seed, k, salt=5):
        rows = rng.random((c, space.n)) < m
        sub_seed = int(rng.integers(2**63))
        sh = sample_shearer(sub, lo * m[idx], seed=sub_seed, size=c)
        extra = rng.random((c, len(idx))) < plan.fresh
        rows[:, idx] = sh | extra
        parts.append(rows)
    return _single(space, _stack(parts, space.n), size), plan


# ---------------------------------------------------------------- samplers by name


MODELS = ("shearer", "hardsphere", "matern1", "matern2", "matern3", "zerodep", "zerophase")


def make_sampler(model: str, space: FiniteMetricSpace, measure) -> Callable:
    """Batch sampler ``(size, seed) -> bool array`` for a named model."""
    m = _masses(measure)
    if model == "shearer":
        return lambda size, seed=0: sample_shearer(space, m, seed, size)
    if model == "zerodep":
        return lambda size, seed=0: sample_zero_dependent(space, m, seed, size)
    if model == "hardsphere":
        return lambda size, seed=0: _hard_sphere_fields(space, m, seed, size)
    if model in ("matern1", "matern2", "matern3"):
        variant = {"matern1": "I", "matern2": "II", "matern3": "III"}[model]
        return lambda size, seed=0: sample_matern(space, m, variant, seed, size)
    if model == "zerophase":
        return lambda size, seed=0: construct_zero_phase(space, m, seed, size)[0]
    raise ValueError(f"unknown model {model!r}; expected one of {', '.join(MODELS)}")


# ---------------------------------------------------------------- statistics


class QueryKind(enum.Enum):
    AVOIDANCE = "AVOIDANCE"
    INTENSITY = "INTENSITY"
    FACTORIAL_MOMENT = "FACTORIAL_MOMENT"
    DEPENDENCE = "DEPENDENCE"
    AVOIDANCE_SLACK = "AVOIDANCE_SLACK"


@dataclass
class Query:
    kind: QueryKind
    A: tuple = ()
    B: tuple = ()
    order: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "Query":
        kind = QueryKind(str(d["kind"]).upper())
        A = d.get("A", d.get("S", d.get("x", ())))
        if isinstance(A, (str, int)):
            A = (A,)
        return cls(kind, tuple(A), tuple(d.get("B", ())), int(d.get("n", d.get("order", 1))))

    def args_text(self) -> str:
        s = "A=" + "|".join(map(str, self.A))
        if self.kind in (QueryKind.DEPENDENCE, QueryKind.AVOIDANCE_SLACK):
            s += ";B=" + "|".join(map(str, self.B))
        if self.kind is QueryKind.FACTORIAL_MOMENT:
            s += f";n={self.order}"
        return s


@dataclass
class Estimate:
    query: Query
    estimate: float
    stderr: float
    n_samples: int
    seed: int
    extra: dict = field(default_factory=dict)


@dataclass
class SampleReport:
    estimates: list
    n_samples: int
    seed: int
    rng: str = RNG_NAME

    def rows(self):
        return [
            (e.query.kind.value, e.query.args_text(), e.estimate, e.stderr, e.n_samples, e.seed)
            for e in self.estimates
        ]


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    n = len(x)
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1)) / math.sqrt(n)


def _empty(rows, mask):
    if mask == 0:
        return np.ones(len(rows), dtype=bool)
    return ~rows[:, list(bits(mask))].any(axis=1)


def _falling(c, n):
    out = np.ones_like(c, dtype=float)
    for i in range(n):
        out *= c - i
    return out


def _evaluate(space, rows, q: Query, masses):
    a = space.mask(q.A)
    b = space.mask(q.B)
    n = len(rows)
    if q.kind is QueryKind.AVOIDANCE:
        return _mean_se(_empty(rows, a)), {}
    if q.kind is QueryKind.INTENSITY:
        return _mean_se(~_empty(rows, a)), {}
    if q.kind is QueryKind.FACTORIAL_MOMENT:
        c = rows[:, list(bits(a))].sum(axis=1)
        return _mean_se(_falling(c, q.order)), {}
    if q.kind is QueryKind.DEPENDENCE:
        gap = min((space.distances[i, j] for i in bits(a) for j in bits(b)), default=math.inf)
        if gap < 1:
            raise ValueError(f"regions are at distance {gap} < 1; dependence statistic undefined")
        ia, ib = _empty(rows, a).astype(float), _empty(rows, b).astype(float)
        iab = ia * ib
        pa, pb, pab = ia.mean(), ib.mean(), iab.mean()
        diff = pab - pa * pb
        psi = iab - pb * ia - pa * ib
        se = float(np.std(psi, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
        return (abs(diff), se), {"signed": diff, "p_A": pa, "p_B": pb, "p_AB": pab}
    if q.kind is QueryKind.AVOIDANCE_SLACK:
        if masses is None:
            raise ValueError("AVOIDANCE_SLACK needs the intensity measure")
        if not space.is_clique(a):
            raise ValueError("AVOIDANCE_SLACK needs a unit-diameter A")
        d = _empty(rows, b).astype(float)
        num = _empty(rows, a | b).astype(float) - d
        for x in bits(a & ~b):
            num = num + masses[x] * _empty(rows, b & ~space.unit_masks[x])
        D = d.mean()
        if D == 0:
            raise ZeroDivisionError("B was never empty in the sample")
        s = num.mean() / D
        psi = (num - s * d) / D
        se = float(np.std(psi, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
        return (s, se), {"lhs": _empty(rows, a | b).mean() / D}
    raise ValueError(f"unknown query kind {q.kind}")


def empirical_stats(sampler, n_samples: int, seed: int, queries, space: FiniteMetricSpace,
                    measure=None) -> SampleReport:
    """Draw ``n_samples`` fields and estimate each query with a standard error.

    ``sampler`` is a batch sampler ``(size, seed)`` or an already drawn
    boolean array.  AVOIDANCE_SLACK reports the slack lhs - rhs of the conditional
    avoidance inequality, which is non-negative for 1-dependent fields.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    rows = np.asarray(sampler if isinstance(sampler, np.ndarray) else sampler(n_samples, seed), dtype=bool)
    masses = None if measure is None else _masses(measure)
    out = []
    for q in queries:
        if isinstance(q, dict):
            q = Query.from_dict(q)
        (est, se), extra = _evaluate(space, rows, q, masses)
        out.append(Estimate(q, float(est), float(se), len(rows), seed, extra))
    return SampleReport(out, len(rows), seed)
