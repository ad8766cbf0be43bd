"""Finite weighted metric spaces and their unit-distance structure.

Points are addressed by opaque ids; internally every region is a Python int
bitmask over point indices (bit ``i`` <-> ``space.ids[i]``).  Distances are
compared with strict operators and no epsilon: ``d < 1`` is "near",
``d >= 1`` is "far".  Callers control rounding of inputs close to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "SpaceError",
    "SizeLimitError",
    "FiniteMetricSpace",
    "RegionSet",
    "AtomicMeasure",
    "GridRegion",
    "Kappa",
    "build_space",
    "unit_sphere",
    "kappa",
    "growth_bound_K",
    "grid_space",
    "random_space",
    "bits",
]

KAPPA_EXACT_LIMIT = 20
GRID_CELL_LIMIT = 4096


class SpaceError(ValueError):
    """Invalid metric-space input; ``indices`` names the offending entries."""

    def __init__(self, message: str, indices: tuple = ()):
        super().__init__(message)
        self.indices = indices


class SizeLimitError(ValueError):
    """An exact computation was asked for on an instance above its size limit."""


def bits(mask: int):
    """Yield the set bit positions of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    ids: tuple
    distances: np.ndarray
    coords: np.ndarray | None = None
    triangle_checked: bool = True
    _index: dict = field(init=False, repr=False)
    _near: tuple = field(init=False, repr=False)
    _unit: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.distances.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)
        object.__setattr__(self, "_index", {x: i for i, x in enumerate(self.ids)})
        near = self.distances < 1.0
        unit = []
        strict = []
        for i in range(self.n):
            row = near[i]
            m = 0
            for j in np.flatnonzero(row):
                m |= 1 << int(j)
            unit.append(m | (1 << i))
            strict.append(m & ~(1 << i))
        object.__setattr__(self, "_unit", tuple(unit))
        object.__setattr__(self, "_near", tuple(strict))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def unit_masks(self) -> tuple:
        """Bitmask of U(x) (open unit sphere, contains x) for each index."""
        return self._unit

    @property
    def neighbor_masks(self) -> tuple:
        """Bitmask of the strict unit-graph neighbours of each index (x excluded)."""
        return self._near

    def index(self, x: Hashable) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise SpaceError(f"unknown point id {x!r}", (x,)) from None

    def mask(self, region) -> int:
        """Bitmask of a region given as RegionSet, int mask, iterable of ids or None (everything)."""
        if region is None:
            return self.full_mask
        if isinstance(region, RegionSet):
            if region.space is not self:
                return self.mask(region.ids)
            return region.mask
        if isinstance(region, (int, np.integer)) and not isinstance(region, bool):
            return int(region)
        if isinstance(region, (str, bytes)):
            region = [region]
        m = 0
        for x in region:
            m |= 1 << self.index(x)
        return m

    def region(self, region) -> "RegionSet":
        return RegionSet(self, self.mask(region))

    def ids_of(self, mask: int) -> tuple:
        return tuple(self.ids[i] for i in bits(mask))

    def unit_graph_edges(self, as_index: bool = False) -> list:
        """Pairs (x, y) of distinct ids with distance < 1, or index pairs."""
        out = []
        for i in range(self.n):
            for j in bits(self._near[i] >> (i + 1) << (i + 1)):
                out.append((i, j) if as_index else (self.ids[i], self.ids[j]))
        return out

    def is_clique(self, mask: int) -> bool:
        for i in bits(mask):
            if (mask & ~self._unit[i]) != 0:
                return False
        return True

    def is_independent(self, mask: int) -> bool:
        for i in bits(mask):
            if mask & self._near[i]:
                return False
        return True

    def diameter(self, mask: int) -> float:
        idx = list(bits(mask))
        if len(idx) < 2:
            return 0.0
        return float(self.distances[np.ix_(idx, idx)].max())

    def distance_between(self, a: int, b: int) -> float:
        """Set distance inf{d(x, y)} between two masks (inf for empty)."""
        ia, ib = list(bits(a)), list(bits(b))
        if not ia or not ib:
            return math.inf
        return float(self.distances[np.ix_(ia, ib)].min())

    def subspace(self, mask: int) -> "FiniteMetricSpace":
        idx = list(bits(mask))
        coords = None if self.coords is None else self.coords[idx].copy()
        return FiniteMetricSpace(
            ids=tuple(self.ids[i] for i in idx),
            distances=self.distances[np.ix_(idx, idx)].copy(),
            coords=coords,
            triangle_checked=self.triangle_checked,
        )

    def __repr__(self):
        mode = "euclidean" if self.coords is not None else "explicit"
        return f"FiniteMetricSpace(n={self.n}, {mode})"


@dataclass(frozen=True, eq=False)
class RegionSet:
    """A subset of the points of one space."""

    space: FiniteMetricSpace
    mask: int

    @property
    def ids(self) -> tuple:
        return self.space.ids_of(self.mask)

    def __len__(self):
        return self.mask.bit_count()

    def __iter__(self):
        return iter(self.ids)

    def __contains__(self, x):
        return bool(self.mask >> self.space.index(x) & 1)

    def __eq__(self, other):
        if isinstance(other, RegionSet):
            return self.space is other.space and self.mask == other.mask
        return NotImplemented

    def __hash__(self):
        return hash((id(self.space), self.mask))

    def diameter(self) -> float:
        return self.space.diameter(self.mask)

    def is_unit_diameter(self) -> bool:
        """All pairwise distances strictly below one (the empty set qualifies)."""
        return self.space.is_clique(self.mask)

    def __repr__(self):
        return f"RegionSet({list(self.ids)!r})"


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Per-point masses on a finite space."""

    space: FiniteMetricSpace
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (self.space.n,):
            raise ValueError(f"expected {self.space.n} masses, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            bad = [self.space.ids[i] for i in np.flatnonzero(~np.isfinite(m) | (m < 0))]
            raise ValueError(f"masses must be finite and non-negative, offending ids {bad}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_mapping(cls, space: FiniteMetricSpace, masses: Mapping, default: float = 0.0):
        m = np.full(space.n, float(default))
        for x, v in masses.items():
            m[space.index(x)] = float(v)
        return cls(space, m)

    @classmethod
    def uniform(cls, space: FiniteMetricSpace, mass: float):
        return cls(space, np.full(space.n, float(mass)))

    def __getitem__(self, x) -> float:
        return float(self.masses[self.space.index(x)])

    def total(self, region=None) -> float:
        mask = self.space.mask(region)
        return math.fsum(float(self.masses[i]) for i in bits(mask))

    def scaled(self, lam: float) -> "AtomicMeasure":
        return AtomicMeasure(self.space, self.masses * float(lam))

    def restricted(self, region) -> "AtomicMeasure":
        mask = self.space.mask(region)
        m = np.zeros(self.space.n)
        for i in bits(mask):
            m[i] = self.masses[i]
        return AtomicMeasure(self.space, m)

    def as_dict(self) -> dict:
        return {x: float(v) for x, v in zip(self.space.ids, self.masses)}

    def __repr__(self):
        return f"AtomicMeasure({self.as_dict()!r})"


def build_space(
    ids: Sequence,
    distances=None,
    coordinates=None,
    validate_triangle: bool = True,
) -> FiniteMetricSpace:
    """Validate and build a finite metric space from a matrix or coordinates.

    Exactly one of ``distances`` (square matrix) or ``coordinates`` (one row
    per id) must be given.  Triangle checking uses a relative slack of 1e-12 to
    absorb floating-point noise; an explicitly violated inequality such as
    5 > 2 + 2 is always reported.
    """
    ids = tuple(ids)
    n = len(ids)
    if len(set(ids)) != n:
        raise SpaceError("duplicate point ids")
    if (distances is None) == (coordinates is None):
        raise SpaceError("give exactly one of distances or coordinates")

    coords = None
    if coordinates is not None:
        coords = np.asarray(coordinates, dtype=float)
        if n == 0:
            coords = coords.reshape(0, coords.shape[-1] if coords.ndim == 2 else 1)
        if coords.ndim == 1:
            coords = coords.reshape(n, 1)
        if coords.shape[0] != n:
            raise SpaceError(f"{coords.shape[0]} coordinate rows for {n} ids")
        if not np.all(np.isfinite(coords)):
            raise SpaceError("non-finite coordinates")
        diff = coords[:, None, :] - coords[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    else:
        d = np.asarray(distances, dtype=float)
        if n == 0 and d.size == 0:
            d = np.zeros((0, 0))
        if n == 1 and d.size == 0:
            d = np.zeros((1, 1))
        if d.shape != (n, n):
            raise SpaceError(f"distance matrix shape {d.shape} does not match {n} ids")
        if not np.all(np.isfinite(d)):
            i, j = np.argwhere(~np.isfinite(d))[0]
            raise SpaceError(f"non-finite distance at ({ids[i]!r}, {ids[j]!r})", (ids[i], ids[j]))
        neg = np.argwhere(d < 0)
        if len(neg):
            i, j = neg[0]
            raise SpaceError(f"negative distance at ({ids[i]!r}, {ids[j]!r})", (ids[i], ids[j]))
        diag = np.flatnonzero(np.diag(d) != 0)
        if len(diag):
            i = diag[0]
            raise SpaceError(f"nonzero diagonal at {ids[i]!r}", (ids[i],))
        asym = np.argwhere(d != d.T)
        if len(asym):
            i, j = asym[0]
            raise SpaceError(
                f"asymmetric distances: d({ids[i]!r},{ids[j]!r})={d[i, j]} but "
                f"d({ids[j]!r},{ids[i]!r})={d[j, i]}",
                (ids[i], ids[j]),
            )
        d = d.copy()

    if validate_triangle and n >= 3:
        _check_triangle(ids, d)
    return FiniteMetricSpace(ids=ids, distances=d, coords=coords, triangle_checked=bool(validate_triangle))


def _check_triangle(ids, d):
    scale = float(d.max()) if d.size else 0.0
    slack = 1e-12 * max(scale, 1.0)
    for k in range(d.shape[0]):
        via = d[:, k][:, None] + d[k, :][None, :]
        bad = np.argwhere(d > via + slack)
        if len(bad):
            i, j = bad[0]
            raise SpaceError(
                f"triangle inequality violated: d({ids[i]!r},{ids[j]!r})={d[i, j]} > "
                f"d({ids[i]!r},{ids[k]!r}) + d({ids[k]!r},{ids[j]!r}) = {via[i, j]}",
                (ids[i], ids[k], ids[j]),
            )


def unit_sphere(space: FiniteMetricSpace, x) -> RegionSet:
    """Open unit sphere U(x) = {y : d(x, y) < 1}."""
    return RegionSet(space, space.unit_masks[space.index(x)])


class Kappa(NamedTuple):
    value: int
    is_exact: bool


def kappa(space: FiniteMetricSpace, region=None, mode: str = "exact", limit: int = KAPPA_EXACT_LIMIT) -> Kappa:
    """Unit partition number: fewest parts of diameter < 1 covering the region.

    Equals the minimum clique cover of the strict unit graph on the region.
    ``mode="greedy"`` peels cliques largest-first and only gives an upper bound.
    """
    mask = space.mask(region)
    if mask == 0:
        return Kappa(0, True)
    if mode == "greedy":
        return Kappa(_greedy_cover(space, mask), False)
    if mode != "exact":
        raise ValueError(f"unknown kappa mode {mode!r}")
    size = mask.bit_count()
    if size > limit:
        raise SizeLimitError(f"exact kappa limited to {limit} points, region has {size}")
    return Kappa(_exact_cover(space, mask), True)


def _greedy_cover(space, mask) -> int:
    near = space.neighbor_masks
    parts = 0
    rest = mask
    while rest:
        # seed with the point having most remaining neighbours, then grow greedily
        seed = max(bits(rest), key=lambda i: ((near[i] & rest).bit_count(), -i))
        clique = 1 << seed
        cand = near[seed] & rest
        while cand:
            nxt = max(bits(cand), key=lambda i: ((near[i] & cand).bit_count(), -i))
            clique |= 1 << nxt
            cand &= near[nxt]
        rest &= ~clique
        parts += 1
    return parts


def _exact_cover(space, mask) -> int:
    """Branch and bound colouring of the complement graph.

    Points are placed one at a time into an existing part (all members near)
    or a new part; branches that cannot beat the incumbent are cut.
    """
    near = space.neighbor_masks
    order = sorted(bits(mask), key=lambda i: -(near[i] & mask).bit_count())
    best = _greedy_cover(space, mask)
    parts: list[int] = []

    def place(k: int):
        nonlocal best
        if len(parts) >= best:
            return
        if k == len(order):
            best = len(parts)
            return
        v = order[k]
        for p in range(len(parts)):
            if parts[p] & ~near[v] == 0:
                parts[p] |= 1 << v
                place(k + 1)
                parts[p] &= ~(1 << v)
        if len(parts) + 1 < best:
            parts.append(1 << v)
            place(k + 1)
            parts.pop()

    place(0)
    return best


def growth_bound_K(space: FiniteMetricSpace, mode: str = "exact", limit: int = KAPPA_EXACT_LIMIT) -> Kappa:
    """K = max over points of kappa(U(x)).  Greedy mode gives an upper bound."""
    best = 0
    exact = True
    for i in range(space.n):
        k = kappa(space, space.unit_masks[i], mode=mode, limit=limit)
        best = max(best, k.value)
        exact &= k.is_exact
    return Kappa(best, exact)


@dataclass(frozen=True)
class GridRegion:
    """Axis-aligned box discretised into cubic cells of width ``h``."""

    dim: int
    lower: tuple
    upper: tuple
    h: float
    intensity: float = 0.0

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.dim < 1 or len(lo) != self.dim or len(hi) != self.dim:
            raise ValueError("box corners must have one entry per dimension")
        if not self.h > 0:
            raise ValueError("cell width h must be positive")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("degenerate box")
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")

    @property
    def cells_per_axis(self) -> tuple:
        out = []
        for a, b in zip(self.lower, self.upper):
            k = round((b - a) / self.h)
            if k < 1 or abs(k * self.h - (b - a)) > 1e-9 * max(1.0, b - a):
                raise ValueError(f"side {b - a} is not a multiple of h={self.h}")
            out.append(int(k))
        return tuple(out)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lower, self.upper))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim


def grid_space(grid: GridRegion, max_cells: int = GRID_CELL_LIMIT, validate_triangle: bool = False):
    """One point per cell centre, mass ``intensity * h**dim`` each.

    Distances are ``h * |integer offset|`` so that cell pairs an exact
    multiple of ``h`` apart land on that multiple without rounding drift.
    """
    counts = grid.cells_per_axis
    total = math.prod(counts)
    if total > max_cells:
        raise SizeLimitError(f"grid has {total} cells, limit {max_cells}")
    idx = np.array(list(np.ndindex(*counts)), dtype=float).reshape(total, grid.dim)
    coords = np.asarray(grid.lower) + (idx + 0.5) * grid.h
    diff = idx[:, None, :] - idx[None, :, :]
    d = grid.h * np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    ids = tuple("c" + "_".join(str(int(v)) for v in row) for row in idx)
    space = FiniteMetricSpace(ids=ids, distances=d, coords=coords, triangle_checked=validate_triangle)
    if validate_triangle:
        _check_triangle(ids, d)
    measure = AtomicMeasure.uniform(space, grid.intensity * grid.cell_volume)
    return space, measure


def random_space(rng: np.random.Generator, n: int, kind: str = "mixed", prefix: str = "p") -> FiniteMetricSpace:
    """A random desk-scale metric space for property checks.

    ``euclidean`` draws coordinates in a box sized so the unit graph is
    neither empty nor complete; ``explicit`` draws distances uniformly in
    [0.55, 1.1], which always satisfies the triangle inequality.
    """
    if kind == "mixed":
        kind = "euclidean" if rng.random() < 0.5 else "explicit"
    ids = [f"{prefix}{i}" for i in range(n)]
    if kind == "euclidean":
        dim = int(rng.integers(1, 3))
        side = max(1.0, (n / 2.0) ** (1.0 / dim))
        coords = rng.uniform(0.0, side, size=(n, dim))
        return build_space(ids, coordinates=coords)
    if kind == "explicit":
        d = rng.uniform(0.55, 1.1, size=(n, n))
        d = np.triu(d, 1)
        d = d + d.T
        return build_space(ids, distances=d)
    raise ValueError(f"unknown kind {kind!r}")
