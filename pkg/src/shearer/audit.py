"""Executable acceptance checks.

Each ``criterion_k`` returns a :class:`CriterionResult`.  Stochastic checks
use fixed seeds and 4 sigma bands with sigma taken from the exact
probability where one is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .cluster import log_z_series, penrose_coefficient
from .lll import (
    bound_value,
    check_euclidean,
    check_inflation,
    check_kp,
    check_symmetric,
    euclidean_alpha,
    symmetric_threshold,
    unit_ball_volume,
)
from .space import GridRegion, bits, build_space, grid_space, kappa, random_space
from .zfun import (
    Phase,
    _ZEvaluator,
    classify_phase,
    critical_bracket,
    critical_lambda,
    delta_Z,
    hard_sphere_partition,
    iterated_difference,
    z_exact,
    z_table,
)
from .sim import (
    construct_zero_phase,
    empirical_stats,
    hard_sphere_run,
    sample_matern,
    sample_shearer,
    thin_field,
)

SIGMA = 4.0
DRAWS = 100_000


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title}: {self.detail}"


def _pair(d=0.5):
    return build_space(["a", "b"], [[0, d], [d, 0]])


def _path3():
    return build_space(["a", "b", "c"], [[0, 0.5, 1.0], [0.5, 0, 0.5], [1.0, 0.5, 0]])


def _subset_avoidance(rows, n):
    """Empirical P(no point in S) for every bitmask S."""
    codes = (rows.astype(np.int64) << np.arange(n)).sum(axis=1)
    freq = np.bincount(codes, minlength=1 << n) / len(rows)
    # avoidance of S is the mass of configurations disjoint from S
    occ = np.arange(1 << n)
    return np.array([freq[(occ & S) == 0].sum() for S in range(1 << n)])


def _within(est, exact, n, sigma=SIGMA):
    se = math.sqrt(max(exact * (1 - exact), 0.0) / n)
    return abs(est - exact) <= sigma * se + 1e-15, se


def _positive_measure(rng, space, low=0.2, high=0.95):
    """Random masses scaled into the positive phase."""
    m = rng.random(space.n) + 0.05
    lam = critical_lambda(space, m)
    return m * lam * rng.uniform(low, high)


# ---------------------------------------------------------------- 1


def criterion_1(n_spaces=200, max_n=14, seed=1) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for _ in range(n_spaces):
        n = int(rng.integers(1, max_n + 1))
        sp = random_space(rng, n)
        m = rng.random(n)
        queries = [sp.full_mask] + [int(rng.integers(0, 1 << n)) for _ in range(8)]
        ev = _ZEvaluator(sp, m)
        for S in queries:
            a = ev(S)
            b = z_exact(sp, m, S, method="enumeration")
            scale = z_exact(sp, -m, S, method="enumeration")
            worst = max(worst, abs(a - b) / scale)
            checked += 1
    ok = worst <= 1e-12
    return CriterionResult(1, "oracle equivalence", ok, f"{checked} subsets, worst relative gap {worst:.2e}")


# ---------------------------------------------------------------- 2


def _identity_instance(rng, max_n=12):
    n = int(rng.integers(2, max_n + 1))
    sp = random_space(rng, n)
    return sp, _positive_measure(rng, sp)


def criterion_2(n_instances=40, max_n=12, seed=2) -> CriterionResult:
    rng = np.random.default_rng(seed)
    tol = 1e-12
    worst = {}

    def note(name, violation):
        worst[name] = max(worst.get(name, 0.0), violation)

    for _ in range(n_instances):
        sp, m = _identity_instance(rng, max_n)
        n = sp.n
        T = z_table(sp, m)
        full = sp.full_mask
        near = sp.unit_masks

        def rand_mask():
            return int(rng.integers(0, 1 << n))

        def rand_clique(within=None):
            pool = list(bits(full if within is None else within))
            if not pool:
                return 0
            x = pool[int(rng.integers(len(pool)))]
            c = 1 << x
            for y in rng.permutation(pool):
                y = int(y)
                if sp.is_clique(c | (1 << y)) and rng.random() < 0.6:
                    c |= 1 << y
            return c

        for _ in range(30):
            B = rand_mask()
            A = rand_clique(B) if B else 0
            # Z(B) = Z(B \ A) - sum_{y in A} m_y Z(B \ U(y)) for unit-diameter A inside B
            rhs = T[B & ~A] - math.fsum(m[y] * T[B & ~near[y]] for y in bits(A))
            note("fundamental identity", abs(T[B] - rhs))

            A, B = rand_mask(), rand_mask()
            B &= ~A
            if all(sp.distances[i, j] >= 1 for i in bits(A) for j in bits(B)):
                note("multiplicativity", abs(T[A | B] - T[A] * T[B]))

            # telescoping over a random ordered partition of A \ B
            A, B = rand_mask(), rand_mask()
            rest = list(bits(A & ~B))
            rng.shuffle(rest)
            cut = sorted(rng.choice(len(rest) + 1, size=min(2, len(rest) + 1), replace=False)) if rest else []
            parts, prev = [], 0
            for c in list(cut) + [len(rest)]:
                if c > prev:
                    parts.append(sum(1 << int(i) for i in rest[prev:c]))
                prev = c
            prod, acc = 1.0, B
            for p in parts:
                prod *= T[acc | p] / T[acc]
                acc |= p
            note("telescoping", abs(T[A | B] / T[B] - prod))

            k = int(rng.integers(1, 4))
            As = [rand_mask() for _ in range(k)]
            B = rand_mask()
            canon = delta_Z(sp, m, As, B)
            literal = iterated_difference(lambda S: float(T[S]), As, B)
            note("delta canonical form", abs(canon - literal))
            note("complete monotonicity", max(0.0, -canon))

            # unit-diameter family with kappa < number of parts gives zero
            C = rand_clique()
            members = list(bits(C))
            if len(members) >= 2:
                k = int(rng.integers(2, len(members) + 1))
                rng.shuffle(members)
                chunks = np.array_split(np.array(members[:k]), k)
                As = [sum(1 << int(i) for i in ch) for ch in chunks]
                Bz = sum(1 << int(i) for i in members[k:])
                note("zero for small kappa", abs(delta_Z(sp, m, As, Bz)))

            # sum over families of size <= r equals one for r >= kappa
            fam = []
            used = 0
            for _ in range(int(rng.integers(1, 4))):
                c = rand_clique() & ~used
                if c:
                    fam.append(c)
                    used |= c
            kap = kappa(sp, used).value
            for r in range(kap, len(fam) + 1):
                total = []
                idx = range(len(fam))
                for size in range(r + 1):
                    for I in combinations(idx, size):
                        AI = [fam[i] for i in I]
                        rest = 0
                        for i in idx:
                            if i not in I:
                                rest |= fam[i]
                        total.append(delta_Z(sp, m, AI, rest))
                note("sum to one", abs(math.fsum(total) - 1.0))

            # upper bounds: unit-diameter A, and z <= 1
            A, B = rand_clique(), rand_mask()
            zab = T[A | B] / T[B]
            note("z <= 1 - M(A minus B)", max(0.0, zab - (1 - math.fsum(m[i] for i in bits(A & ~B)))))
            note("z <= 1", max(0.0, zab - 1))

            # lower bound: A1 + A2 unit-diameter, B avoiding A2
            C = rand_clique()
            members = list(bits(C))
            if len(members) >= 2:
                A1 = sum(1 << i for i in members[: len(members) // 2])
                A2 = C & ~A1
                B = rand_mask() & ~A2
                note("z(A1,B) >= M(A2)", max(0.0, math.fsum(m[i] for i in bits(A2)) - T[A1 | B] / T[B]))

            # monotonicity in space, and positivity inherited by subsets
            B = rand_mask()
            A = B & rand_mask()
            note("Z monotone in space", max(0.0, T[B] - T[A]))
            note("positivity of subsets", 0.0 if (T[B] <= 0 or T[A] > 0) else 1.0)

            # z(A, B) >= z(A', B') for A in A', B in B', A cap B = A cap B'
            A, B = rand_mask(), rand_mask()
            Ap = A | rand_mask()
            Bp = B | (rand_mask() & ~A)
            note("z antitone", max(0.0, T[Ap | Bp] / T[Bp] - T[A | B] / T[B]))
    bad = {k: v for k, v in worst.items() if v > tol}
    detail = ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items()))
    return CriterionResult(2, "identity suite", not bad, detail)


# ---------------------------------------------------------------- 3


def criterion_3() -> CriterionResult:
    sp = _pair()
    got = [classify_phase(sp, [v, v]).label for v in (0.5, 0.6, 0.4)]
    one = build_space(["x"], [[0.0]])
    got.append(classify_phase(one, [1.2]).label)
    want = [Phase.SH_BOUNDARY, Phase.ZERO, Phase.POSITIVE, Phase.EMPTY]
    return CriterionResult(3, "phase dichotomy", got == want, " ".join(p.value for p in got))


# ---------------------------------------------------------------- 4


def criterion_4() -> CriterionResult:
    one = build_space(["x"], [[0.0]])
    vals = [
        (critical_lambda(one, [1.0]), 1.0),
        (critical_lambda(_pair(), [1.0, 1.0]), 0.5),
        (critical_lambda(_path3(), [1.0, 1.0, 1.0]), (3 - math.sqrt(5)) / 2),
    ]
    err = max(abs(a - b) for a, b in vals)
    return CriterionResult(4, "critical values", err <= 1e-9, f"max error {err:.1e}")


# ---------------------------------------------------------------- 5


def _disjoint_pairs(n):
    """All (A, B) with A, B disjoint bitmasks; z(A, B) only sees A minus B."""
    for code in range(3 ** n):
        A = B = 0
        c = code
        for i in range(n):
            c, r = divmod(c, 3)
            if r == 1:
                A |= 1 << i
            elif r == 2:
                B |= 1 << i
        yield A, B


def criterion_5(n_instances=200, max_n=7, seed=5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    thresholds_ok = symmetric_threshold(1) == Fraction(4, 27) and symmetric_threshold(2) == Fraction(27, 256)
    found = {"SYMMETRIC": 0, "INFLATION": 0, "KOTECKY_PREISS": 0}
    sound, positive = True, True
    worst = math.inf
    tries = 0
    instances = 0
    while instances < n_instances and tries < 20 * n_instances:
        tries += 1
        n = int(rng.integers(1, max_n + 1))
        sp = random_space(rng, n)
        m = rng.random(n) * rng.choice([0.05, 0.1, 0.2, 0.4])
        certs = [check_symmetric(sp, m)]
        for a in (0.5, 1.0, 2.0):
            if (1 + a) * m.max() <= 1:
                certs.append(check_inflation(sp, m, a))
        for c in (1.2, 1.5, 2.0, 3.0):
            certs.append(check_kp(sp, m, c * m))
        certs = [c for c in certs if c.condition_holds]
        if not certs:
            continue
        instances += 1
        positive &= classify_phase(sp, m).label is Phase.POSITIVE
        T = z_table(sp, m)
        for c in certs:
            found[c.variant.value] += 1
        for A, B in _disjoint_pairs(n):
            z = T[A | B] / T[B]
            for c in certs:
                b = bound_value(c, A, B, sp)
                worst = min(worst, z - b)
        sound &= worst >= -1e-12
    ok = thresholds_ok and sound and positive and instances >= n_instances
    detail = (f"{instances} instances ({', '.join(f'{k} {v}' for k, v in found.items())}), "
              f"min z - bound {worst:.3e}, thresholds exact {thresholds_ok}, all POSITIVE {positive}")
    return CriterionResult(5, "local lemma soundness", ok, detail)


# ---------------------------------------------------------------- 6


def _newton_alpha(lam, V):
    a = 0.0
    for _ in range(100):
        f = a * math.exp(-a * V) - lam
        df = (1 - a * V) * math.exp(-a * V)
        a -= f / df
    return a


def criterion_6(n_subsets=150, seed=6) -> CriterionResult:
    rng = np.random.default_rng(seed)
    notes = []
    V = unit_ball_volume(1)
    lam_max = 1 / (2 * math.e)
    a_max, _ = euclidean_alpha(lam_max, 1)
    a01, _ = euclidean_alpha(0.1, 1)
    oracle = _newton_alpha(0.1, V)
    ok = V == 2.0 and a_max == 0.5 and abs(a01 - oracle) <= 1e-10
    notes.append(f"V={V}, alpha(1/2e)={a_max}, alpha(0.1)={a01:.12f}")

    h = 0.05
    sp, meas = grid_space(GridRegion(1, (0.0,), (6.0,), h, lam_max))
    m = meas.masses
    cert = check_euclidean(lam_max, 1, cell_volume=h)
    ev = _ZEvaluator(sp, m)
    full = sp.full_mask
    pos = ev(full) > 0
    min_gap = math.inf
    for _ in range(n_subsets):
        B = int(rng.integers(0, 1 << 60)) | (int(rng.integers(0, 1 << 60)) << 60)
        B &= full
        A = int(rng.integers(0, 1 << 60)) | (int(rng.integers(0, 1 << 60)) << 60)
        A &= full
        if rng.random() < 0.5:
            lo, hi = sorted(rng.integers(0, sp.n + 1, size=2))
            A = ((1 << int(hi)) - 1) & ~((1 << int(lo)) - 1)
        zb, zab = ev(B), ev(A | B)
        pos &= zb > 0 and zab > 0
        if zb > 0:
            min_gap = min(min_gap, zab / zb - bound_value(cert, A, B, sp))
    ok &= pos and min_gap >= -0.02
    notes.append(f"grid positive {pos}, min z - bound {min_gap:.4f}")

    # beyond the endpoint Z stays positive while the condition fails for every uniform N
    m3 = np.full(sp.n, 0.3 * h)
    ev3 = _ZEvaluator(sp, m3)
    pos3 = ev3(full) > 0
    for _ in range(50):
        S = int(rng.integers(0, 1 << 60)) | (int(rng.integers(0, 1 << 60)) << 60)
        pos3 &= ev3(S & full) > 0
    fails = all(not check_kp(sp, m3, np.full(sp.n, a * h)).condition_holds for a in np.linspace(0.05, 5.0, 34))
    ok &= pos3 and fails
    notes.append(f"lambda=0.3: Z positive {pos3}, condition fails for all N {fails}")
    return CriterionResult(6, "Euclidean corollary in d=1", bool(ok), "; ".join(notes))


# ---------------------------------------------------------------- 7


def criterion_7() -> CriterionResult:
    edge = [[0, 0.5], [0.5, 0]]
    path = [[0, 0.5, 1.0], [0.5, 0, 0.5], [1.0, 0.5, 0]]
    tri = [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]]
    coeffs = [penrose_coefficient(edge), penrose_coefficient(path), penrose_coefficient(tri)]
    ok = coeffs == [1, 1, 2]
    ok &= all(penrose_coefficient(np.zeros((n, n))) == math.factorial(n - 1) for n in range(1, 7))
    notes = [f"edge/path/triangle {coeffs}"]

    one = build_space(["x"], [[0.0]])
    for mval in (0.1, 0.3, 0.6):
        s = log_z_series(one, [mval], ["x"], [], order=6)
        exact = -math.log1p(-mval)
        for k, ps in enumerate(s.partial_sums, start=1):
            tail = mval ** (k + 1) / ((k + 1) * (1 - mval))
            ok &= 0 <= exact - ps <= tail + 1e-15
            ok &= abs(s.terms[k - 1] - mval ** k / k) <= 1e-15

    pair = _pair()
    s = log_z_series(pair, [0.1, 0.1], ["a", "b"], [], order=4)
    exact = -math.log(z_exact(pair, [0.1, 0.1]))
    tail = 0.2 ** 5 / (5 * 0.8)
    gap = exact - s.partial_sums[-1]
    ok &= 0 <= gap <= tail
    notes.append(f"two-atom gap {gap:.2e} <= tail {tail:.2e}")
    return CriterionResult(7, "cluster expansion", bool(ok), "; ".join(notes))


# ---------------------------------------------------------------- 8


def _shearer_spaces(seed):
    rng = np.random.default_rng(seed)
    out = [(_path3(), np.array([0.2, 0.2, 0.2]))]
    for n in (6, 8, 10):
        sp = random_space(rng, n, kind="euclidean")
        out.append((sp, _positive_measure(rng, sp, 0.5, 0.95)))
    return out


def criterion_8(draws=DRAWS, seed=8) -> CriterionResult:
    ok = True
    worst = 0.0
    tested = 0
    hard_core = True
    moments_ok = True
    for k, (sp, m) in enumerate(_shearer_spaces(seed)):
        rows = sample_shearer(sp, m, seed=seed + k, size=draws)
        for i, j in sp.unit_graph_edges(as_index=True):
            hard_core &= not np.any(rows[:, i] & rows[:, j])
        T = z_table(sp, m)
        emp = _subset_avoidance(rows, sp.n)
        for S in range(1 << sp.n):
            good, se = _within(emp[S], T[S], draws)
            if se > 0:
                worst = max(worst, abs(emp[S] - T[S]) / se)
            ok &= good
            tested += 1
        # factorial moments: E xi(B)^[n] = n! e_n(B), never above M(B)^n
        rng = np.random.default_rng(seed + 100 + k)
        for _ in range(10):
            B = int(rng.integers(1, 1 << sp.n))
            for order in (1, 2, 3):
                exact = _factorial_moment_exact(sp, m, B, order)
                est = empirical_stats(rows, draws, seed, [{"kind": "FACTORIAL_MOMENT", "A": list(sp.ids_of(B)), "n": order}], sp)
                e = est.estimates[0]
                moments_ok &= abs(e.estimate - exact) <= SIGMA * e.stderr + 1e-12
                moments_ok &= e.estimate <= math.fsum(m[i] for i in bits(B)) ** order + SIGMA * e.stderr
                moments_ok &= exact <= math.fsum(m[i] for i in bits(B)) ** order + 1e-12
    ok = ok and hard_core and moments_ok
    return CriterionResult(8, "Shearer sampler law", bool(ok),
                           f"{tested} subsets, worst |z-score| {worst:.2f}, hard-core {hard_core}, moments {moments_ok}")


def _factorial_moment_exact(sp, m, B, order):
    """order! times the sum over independent order-subsets of B of the mass product."""
    total = []
    for I in combinations(list(bits(B)), order):
        mask = sum(1 << i for i in I)
        if sp.is_independent(mask):
            total.append(math.prod(m[i] for i in I))
    return math.factorial(order) * math.fsum(total)


# ---------------------------------------------------------------- 9


def criterion_9(draws=DRAWS, seed=9) -> CriterionResult:
    sp = _path3()
    rows = sample_matern(sp, [0.3] * 3, "I", seed=seed, size=draws)
    target = (0.21, 0.147, 0.21)
    emp = rows.mean(axis=0)
    ok = all(_within(e, t, draws)[0] for e, t in zip(emp, target))
    rep = empirical_stats(rows, draws, seed, [{"kind": "DEPENDENCE", "A": ["a"], "B": ["c"]}], sp)
    d = rep.estimates[0]
    gap = 0.643 - 0.6241
    detected = d.estimate > SIGMA * d.stderr
    close = abs(d.estimate - gap) <= SIGMA * d.stderr
    ok = ok and detected and close
    return CriterionResult(9, "Matern I audit", bool(ok),
                           f"intensities {np.round(emp, 4).tolist()}, gap {d.estimate:.4f} +- {d.stderr:.4f}")


# ---------------------------------------------------------------- 10


def criterion_10(attempts=DRAWS, seed=10) -> CriterionResult:
    notes = []
    ok = True
    clique = build_space(list("wxyz"), np.full((4, 4), 0.3) - 0.3 * np.eye(4))
    targets = [
        ("atomic", clique, np.full(4, 0.25), hard_sphere_partition(clique, np.full(4, 0.25))),
        ("interval", ((0.0,), (0.5,)), 2.0, 2.0),
    ]
    for name, target, fug, exact_Z in targets:
        run = hard_sphere_run(target, fug, attempts, seed=seed)
        freq, _ = run.empty_frequency()
        good, _ = _within(freq, 0.5, int(run.accepted.sum()))
        est, se = run.partition_estimate()
        p = exact_Z * math.exp(-run.total_mass)
        se_exact = math.exp(run.total_mass) * math.sqrt(p * (1 - p) / attempts)
        good &= abs(est - exact_Z) <= SIGMA * se_exact
        ok &= good
        notes.append(f"{name}: empty {freq:.4f}, Z {est:.4f} vs {exact_Z}")
    return CriterionResult(10, "hard-sphere rejection", bool(ok), "; ".join(notes))


# ---------------------------------------------------------------- 11


def criterion_11(draws=DRAWS, seed=11) -> CriterionResult:
    d = np.array([[0, 0.5, 2, 2], [0.5, 0, 2, 2], [2, 2, 0, 0.5], [2, 2, 0.5, 0]])
    sp = build_space(["a", "b", "c", "d"], d)
    m = np.array([0.6, 0.6, 0.3, 0.3])
    rows, plan = construct_zero_phase(sp, m, seed=seed, size=draws)
    lam_ok = abs(plan.Lambda - 5 / 6) <= 1e-9
    W = plan.witness.mask
    never_empty = not np.any(~rows[:, list(bits(W))].any(axis=1))
    emp = rows.mean(axis=0)
    inten = all(_within(e, t, draws)[0] for e, t in zip(emp, m))
    rep = empirical_stats(rows, draws, seed, [
        {"kind": "DEPENDENCE", "A": ["a"], "B": ["c"]},
        {"kind": "DEPENDENCE", "A": ["a", "b"], "B": ["c", "d"]},
        {"kind": "DEPENDENCE", "A": ["b"], "B": ["d"]},
    ], sp)
    dep = all(e.estimate <= SIGMA * e.stderr for e in rep.estimates)
    ok = lam_ok and never_empty and inten and dep
    return CriterionResult(11, "zero-phase construction", bool(ok),
                           f"Lambda {plan.Lambda:.12f}, witness {list(plan.witness.ids)}, never empty {never_empty}, "
                           f"intensities {np.round(emp, 4).tolist()}, dependence ok {dep}")


# ---------------------------------------------------------------- 12


def criterion_12(draws=DRAWS, seed=12) -> CriterionResult:
    sp = _path3()
    rows = sample_shearer(sp, [0.2] * 3, seed=seed, size=draws)
    thin = thin_field(sp, rows, 0.5, seed=seed + 1)
    T = z_table(sp, [0.1] * 3)
    emp = _subset_avoidance(thin, 3)
    ok = all(_within(emp[S], T[S], draws)[0] for S in range(8))
    err = max(abs(emp - T))
    return CriterionResult(12, "thinning law", bool(ok), f"max avoidance error {err:.4f}")


# ---------------------------------------------------------------- 13


def criterion_13(n_instances=60, max_n=8, seed=13) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst_neg = worst_pos = 0.0
    for k in range(n_instances):
        n = int(rng.integers(2, max_n + 1))
        sp = random_space(rng, n)
        m = rng.random(n) + 0.05
        lo, _ = critical_bracket(sp, m)
        # every few instances sit at the boundary of the Shearer region
        m = m * (lo if k % 4 == 0 else lo * rng.uniform(0.2, 1.0))
        label = classify_phase(sp, m).label
        if label not in (Phase.POSITIVE, Phase.SH_BOUNDARY):
            continue
        T = z_table(sp, m)
        H = z_table(sp, -m)
        for A, B in _disjoint_pairs(n):
            worst_neg = max(worst_neg, T[A | B] - T[A] * T[B])
            worst_pos = max(worst_pos, 1 / (H[A] * H[B]) - 1 / H[A | B])
    ok = worst_neg <= 1e-12 and worst_pos <= 1e-12
    return CriterionResult(13, "association inequalities", bool(ok),
                           f"max Z(A+B) - Z(A)Z(B) {worst_neg:.1e}, max hard-sphere violation {worst_pos:.1e}")


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 14)}


def run_all(selected=None) -> list:
    keys = sorted(CRITERIA) if selected is None else sorted(selected)
    return [CRITERIA[k]() for k in keys]
