"""Local-lemma style sufficient conditions for the positive phase and their lower bounds on z."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from .space import FiniteMetricSpace, SizeLimitError, bits, growth_bound_K, kappa
from .zfun import Phase, _masses, classify_phase

__all__ = [
    "Variant",
    "BoundCertificate",
    "symmetric_threshold",
    "max_clique_mass",
    "unit_cliques",
    "check_symmetric",
    "check_inflation",
    "check_kp",
    "unit_ball_volume",
    "euclidean_alpha",
    "check_euclidean",
    "bound_value",
]

KAPPA_LIMIT = 20
CLIQUE_LIMIT = 50_000
SUBCLIQUE_SAMPLES = 64


class Variant(enum.Enum):
    SYMMETRIC = "SYMMETRIC"
    INFLATION = "INFLATION"
    KOTECKY_PREISS = "KOTECKY_PREISS"
    EUCLIDEAN = "EUCLIDEAN"


@dataclass
class BoundCertificate:
    variant: Variant
    params: dict
    condition_holds: bool
    bounds: dict = field(default_factory=dict)
    witness: tuple | None = None
    heuristic: bool = False

    def as_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "condition_holds": self.condition_holds,
            "params": self.params,
            "bounds": self.bounds,
            "witness": None if self.witness is None else list(self.witness),
            "heuristic": self.heuristic,
        }


def symmetric_threshold(K: int) -> Fraction:
    """(K+1)^(K+1) / (K+2)^(K+2) as an exact fraction."""
    if K < 0:
        raise ValueError("K must be non-negative")
    return Fraction((K + 1) ** (K + 1), (K + 2) ** (K + 2))


def _unit_graph(space: FiniteMetricSpace) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(space.n))
    g.add_edges_from(space.unit_graph_edges(as_index=True))
    return g


def _maximal_cliques(space: FiniteMetricSpace) -> list[int]:
    out = []
    for clique in nx.find_cliques(_unit_graph(space)):
        out.append(sum(1 << i for i in clique))
    return sorted(out)


def max_clique_mass(space: FiniteMetricSpace, measure, limit: int = KAPPA_LIMIT):
    """Largest mass of a diameter < 1 subset, and whether the value is exact.

    Masses are non-negative so a maximal clique attains the maximum.  Above
    ``limit`` points the cover ``max_x M(U(x))`` is returned as an upper bound.
    """
    m = _masses(measure)
    if space.n <= limit:
        best, arg = 0.0, 0
        for c in _maximal_cliques(space):
            w = math.fsum(m[i] for i in bits(c))
            if w > best:
                best, arg = w, c
        return best, arg, True
    sums = [math.fsum(m[i] for i in bits(u)) for u in space.unit_masks]
    i = int(np.argmax(sums))
    return sums[i], space.unit_masks[i], False


def unit_cliques(space: FiniteMetricSpace, limit: int = CLIQUE_LIMIT, seed: int = 0):
    """Non-empty diameter < 1 subsets as bitmasks, plus a heuristic flag.

    All cliques are listed while their number stays within ``limit``.  Beyond
    that the list holds singletons, maximal cliques, index-order prefixes of
    each maximal clique and random sub-cliques, and the flag is set.
    """
    maximal = _maximal_cliques(space)
    total = sum(2 ** c.bit_count() - 1 for c in maximal)
    found: set[int] = set()
    if total <= limit:
        for c in maximal:
            sub = c
            while sub:
                found.add(sub)
                sub = (sub - 1) & c
        return sorted(found), False
    rng = np.random.default_rng(seed)
    found.update(1 << i for i in range(space.n))
    for c in maximal:
        found.add(c)
        members = list(bits(c))
        acc = 0
        for i in members:
            acc |= 1 << i
            found.add(acc)
        for _ in range(SUBCLIQUE_SAMPLES):
            keep = rng.random(len(members)) < 0.5
            sub = sum(1 << i for i, k in zip(members, keep) if k)
            if sub:
                found.add(sub)
    return sorted(found), True


def _growth_K(space):
    try:
        return growth_bound_K(space, mode="exact", limit=KAPPA_LIMIT)
    except SizeLimitError:
        return growth_bound_K(space, mode="greedy")


def check_symmetric(space: FiniteMetricSpace, measure) -> BoundCertificate:
    """Symmetric condition: every diameter < 1 set has mass at most (K+1)^(K+1)/(K+2)^(K+2)."""
    K = _growth_K(space)
    thr = symmetric_threshold(K.value)
    worst, arg, exact = max_clique_mass(space, measure)
    holds = worst <= float(thr)
    params = {
        "K": K.value,
        "K_exact": K.is_exact,
        "threshold": float(thr),
        "threshold_fraction": f"{thr.numerator}/{thr.denominator}",
        "max_unit_mass": worst,
        "max_unit_mass_exact": exact,
    }
    return BoundCertificate(
        Variant.SYMMETRIC, params, holds,
        witness=None if holds else space.ids_of(arg),
        heuristic=not (exact and K.is_exact),
    )


def check_inflation(space: FiniteMetricSpace, measure, alpha: float) -> BoundCertificate:
    """Inflation condition: (1 + alpha) M has non-negative Z on every subset."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    m = _masses(measure)
    label = classify_phase(space, (1.0 + alpha) * m)
    holds = label.label in (Phase.POSITIVE, Phase.SH_BOUNDARY)
    params = {"alpha": float(alpha), "inflated_phase": label.label.value}
    witness = None
    if not holds and label.witness is not None:
        witness = label.witness.ids
    return BoundCertificate(Variant.INFLATION, params, holds, witness=witness)


def check_kp(space: FiniteMetricSpace, M, N, clique_limit: int = CLIQUE_LIMIT) -> BoundCertificate:
    """Kotecky-Preiss type condition with auxiliary measure N.

    Checks ``sum_{x in A} m_x exp(N(U(x) minus A)) <= 1 - exp(-N(A))`` on
    every diameter < 1 set A, and separately the pointwise form
    ``M(A) exp(N(U(x) minus A)) <= 1 - exp(-N(A))`` for atoms x of A.
    """
    m = _masses(M)
    n = _masses(N)
    if n.shape != m.shape:
        raise ValueError("M and N must live on the same space")
    if np.any(n < 0) or not np.all(np.isfinite(n)):
        raise ValueError("N must be finite and non-negative")
    bad = np.flatnonzero((m == 0) & (n > 0))
    if len(bad):
        raise ValueError(f"N charges atoms without M mass: {[space.ids[i] for i in bad]}")

    cliques, heuristic = unit_cliques(space, limit=clique_limit)
    C = np.array([[(A >> i) & 1 for i in range(space.n)] for A in cliques], dtype=float).reshape(-1, space.n)
    U = np.array([[(u >> j) & 1 for j in range(space.n)] for u in space.unit_masks], dtype=float)
    # N(U(x) minus A) = N(U(x)) - N(U(x) and A), one row per clique
    outside = (U @ n)[None, :] - C @ (U * n).T
    e = np.exp(outside)
    rhs = -np.expm1(-(C @ n))
    lhs = (C * m * e).sum(axis=1)
    gap = lhs - rhs
    violated = np.flatnonzero(gap > 0)
    holds = len(violated) == 0
    witness = None if holds else space.ids_of(cliques[violated[0]])
    pointwise = (C @ m)[:, None] * e
    active = (C > 0) & (m > 0)[None, :]
    strong = bool(np.all(pointwise[active] <= np.broadcast_to(rhs[:, None], pointwise.shape)[active]))
    worst_gap = float(gap.max()) if len(gap) else 0.0
    params = {
        "N": {space.ids[i]: float(n[i]) for i in range(space.n)},
        "strong_form_holds": strong,
        "cliques_checked": len(cliques),
        "worst_gap": worst_gap,
    }
    return BoundCertificate(Variant.KOTECKY_PREISS, params, holds, witness=witness, heuristic=heuristic)


def unit_ball_volume(dim: int) -> float:
    """Volume of the radius-1 ball in R^dim."""
    if not 1 <= dim <= 20:
        raise ValueError("dimension must be between 1 and 20")
    # V_d = 2 pi / d * V_{d-2} keeps V_1 = 2 and V_2 = pi exact
    v = 2.0 if dim % 2 else 1.0
    for d in range(2 if dim % 2 == 0 else 3, dim + 1, 2):
        v *= 2.0 * math.pi / d
    return v


def euclidean_alpha(lam: float, dim: int, tol: float = 1e-12):
    """Solve lam = alpha exp(-alpha V) for alpha in [0, 1/V]; returns (alpha, V)."""
    V = unit_ball_volume(dim)
    top = 1.0 / (math.e * V)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam > top * (1 + 1e-15):
        raise ValueError(f"lambda {lam} exceeds the admissible endpoint 1/(eV) = {top}")
    if lam == 0:
        return 0.0, V
    if lam >= top:
        return 1.0 / V, V
    lo, hi = 0.0, 1.0 / V
    f = lambda a: a * math.exp(-a * V) - lam
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * 1e-3:
            break
    alpha = 0.5 * (lo + hi)
    if abs(f(alpha)) >= tol:
        raise ArithmeticError("bisection did not reach the requested residual")
    return alpha, V


def check_euclidean(lam: float, dim: int, cell_volume: float | None = None, tol: float = 1e-12) -> BoundCertificate:
    """Lebesgue-intensity condition on R^dim; bounds use exp(-alpha L(A minus B)).

    ``cell_volume`` lets the certificate be applied to grid discretisations,
    where L of a region is its cell count times the cell volume.
    """
    V = unit_ball_volume(dim)
    params = {"lambda": float(lam), "dim": dim, "V": V, "lambda_max": 1.0 / (math.e * V)}
    if cell_volume is not None:
        params["cell_volume"] = float(cell_volume)
    try:
        alpha, _ = euclidean_alpha(lam, dim, tol)
    except ValueError:
        return BoundCertificate(Variant.EUCLIDEAN, params, False)
    params["alpha"] = alpha
    params["free_energy_bound"] = alpha
    params["statement"] = f"-log Z(B, lambda L) / L(B) <= {alpha!r} for every bounded B"
    return BoundCertificate(Variant.EUCLIDEAN, params, True)


def _kappa_value(space, mask) -> int:
    # a greedy cover overestimates kappa, which only lowers the bound
    if mask.bit_count() <= KAPPA_LIMIT:
        return kappa(space, mask).value
    return kappa(space, mask, mode="greedy").value


def bound_value(cert: BoundCertificate, A, B, space: FiniteMetricSpace) -> float:
    """Lower bound on z(A, B) implied by a holding certificate."""
    if not cert.condition_holds:
        raise ValueError(f"{cert.variant.value} condition does not hold; no bound available")
    diff = space.mask(A) & ~space.mask(B)
    if diff == 0:
        return 1.0
    p = cert.params
    if cert.variant is Variant.SYMMETRIC:
        K = p["K"]
        return ((K + 1) / (K + 2)) ** _kappa_value(space, diff)
    if cert.variant is Variant.INFLATION:
        a = p["alpha"]
        return (a / (1 + a)) ** _kappa_value(space, diff)
    if cert.variant is Variant.KOTECKY_PREISS:
        n = p["N"]
        return math.exp(-math.fsum(n[space.ids[i]] for i in bits(diff)))
    if cert.variant is Variant.EUCLIDEAN:
        if "cell_volume" not in p:
            raise ValueError("euclidean certificate needs a cell volume to measure atomic regions")
        return math.exp(-p["alpha"] * diff.bit_count() * p["cell_volume"])
    raise ValueError(f"unknown variant {cert.variant}")
