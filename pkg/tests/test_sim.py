import math

import numpy as np
import pytest
from hypothesis import given, settings

from shearer.sim import (
    BinaryField,
    PointConfiguration,
    Query,
    QueryKind,
    construct_zero_phase,
    empirical_stats,
    hard_sphere_run,
    make_sampler,
    matern_exact_intensities,
    matern_target_intensity_path3,
    sample_hard_sphere,
    sample_matern,
    sample_shearer,
    sample_zero_dependent,
    thin_field,
    thinned,
)
from shearer.space import GridRegion, build_space
from shearer.zfun import ZeroDenominator, critical_lambda, hard_sphere_partition, z_table

from conftest import line_space, small_spaces

N = 100_000


def _avoidance(rows, n):
    codes = (rows.astype(np.int64) << np.arange(n)).sum(axis=1)
    freq = np.bincount(codes, minlength=1 << n) / len(rows)
    occ = np.arange(1 << n)
    return np.array([freq[(occ & S) == 0].sum() for S in range(1 << n)])


def _close(est, p, n, sigma=4.0):
    return abs(est - p) <= sigma * math.sqrt(p * (1 - p) / n) + 1e-12


# ---------------------------------------------------------------- configurations


def test_point_configuration_flags(path3):
    c = PointConfiguration.from_counts(path3, [1, 0, 1])
    assert c.is_simple and c.is_hard_core and len(c) == 2
    c = PointConfiguration.from_counts(path3, [1, 1, 0])
    assert c.is_simple and not c.is_hard_core
    c = PointConfiguration.from_counts(path3, [2, 0, 0])
    assert not c.is_simple and not c.is_hard_core
    assert PointConfiguration.from_coordinates([[0.0], [1.0]]).is_hard_core
    assert not PointConfiguration.from_coordinates([[0.0], [0.5]]).is_hard_core


def test_binary_field_domain(path3):
    f = BinaryField(path3, [1, 0, 1])
    assert f["a"] == 1 and f.as_dict() == {"a": 1, "b": 0, "c": 1}
    assert f.occupied.ids == ("a", "c")
    with pytest.raises(ValueError):
        BinaryField(path3, [1, 0])


# ---------------------------------------------------------------- zero-dependent


def test_zero_dependent_examples():
    sp = line_space([0.0, 0.5, 3.0])
    rows = sample_zero_dependent(sp, [1.0, 0.0, 0.3], seed=1, size=N)
    assert rows[:, 0].all() and not rows[:, 1].any()
    assert _close(rows[:, 2].mean(), 0.3, N)
    with pytest.raises(ValueError):
        sample_zero_dependent(sp, [1.2, 0.0, 0.0])
    assert isinstance(sample_zero_dependent(sp, [0.1, 0.1, 0.1]), BinaryField)


def test_zero_dependent_dependence_is_null(path3):
    f = make_sampler("zerodep", path3, [0.4, 0.4, 0.4])
    rep = empirical_stats(f, N, 2, [Query(QueryKind.DEPENDENCE, ("a",), ("c",))], path3)
    e = rep.estimates[0]
    assert e.estimate <= 4 * e.stderr


def test_dependence_needs_separation(path3):
    f = make_sampler("zerodep", path3, [0.4, 0.4, 0.4])
    with pytest.raises(ValueError):
        empirical_stats(f, 100, 0, [Query(QueryKind.DEPENDENCE, ("a",), ("b",))], path3)


# ---------------------------------------------------------------- Shearer


def test_shearer_single_atom(single):
    rows = sample_shearer(single, [0.4], seed=3, size=N)
    assert _close(rows.mean(), 0.4, N)


def test_shearer_path3(path3):
    rows = sample_shearer(path3, [0.2] * 3, seed=4, size=N)
    assert not (rows[:, 0] & rows[:, 1]).any() and not (rows[:, 1] & rows[:, 2]).any()
    assert (rows[:, 0] & rows[:, 2]).any()
    T = z_table(path3, [0.2] * 3)
    av = _avoidance(rows, 3)
    assert T[path3.full_mask] == pytest.approx(0.44)
    assert all(_close(av[S], T[S], N) for S in range(8))


def test_shearer_far_atoms_independent():
    sp = line_space([0.0, 2.0])
    rows = sample_shearer(sp, [0.3, 0.5], seed=5, size=N)
    rep = empirical_stats(rows, N, 5, [
        Query(QueryKind.DEPENDENCE, ("p0",), ("p1",)),
        Query(QueryKind.FACTORIAL_MOMENT, ("p0", "p1"), order=2),
    ], sp)
    dep, fm = rep.estimates
    assert dep.estimate <= 4 * dep.stderr
    assert abs(fm.estimate - 0.3) <= 4 * fm.stderr


def test_shearer_factorial_moment_vanishes_on_unit_sets(path3):
    rows = sample_shearer(path3, [0.3, 0.2, 0.3], seed=6, size=20_000)
    rep = empirical_stats(rows, len(rows), 6, [Query(QueryKind.FACTORIAL_MOMENT, ("a", "b"), order=2)], path3)
    assert rep.estimates[0].estimate == 0.0


def test_shearer_rejects_zero_phase(pair):
    with pytest.raises(ZeroDenominator):
        sample_shearer(pair, [0.6, 0.6], size=10)


@settings(max_examples=25, deadline=None)
@given(small_spaces(min_n=1, max_n=6))
def test_shearer_is_hard_core(sm):
    sp, m = sm
    m = (m + 0.05) * 0.95 * critical_lambda(sp, m + 0.05)
    rows = sample_shearer(sp, m, seed=7, size=2000)
    for i, j in sp.unit_graph_edges(as_index=True):
        assert not (rows[:, i] & rows[:, j]).any()


def test_shearer_avoidance_on_random_space():
    rng = np.random.default_rng(8)
    pts = rng.uniform(0, 3, size=(8, 2))
    sp = build_space([f"q{i}" for i in range(8)], coordinates=pts)
    m = rng.random(8) + 0.05
    m = 0.8 * critical_lambda(sp, m) * m
    rows = sample_shearer(sp, m, seed=9, size=N)
    T = z_table(sp, m)
    av = _avoidance(rows, 8)
    assert all(_close(av[S], T[S], N) for S in range(1 << 8))


def test_reproducible_by_seed(path3):
    a = sample_shearer(path3, [0.2] * 3, seed=10, size=20_000)
    b = sample_shearer(path3, [0.2] * 3, seed=10, size=20_000)
    c = sample_shearer(path3, [0.2] * 3, seed=11, size=20_000)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# ---------------------------------------------------------------- thinning


def test_thinning_extremes(path3):
    rows = sample_shearer(path3, [0.2] * 3, seed=12, size=1000)
    assert np.array_equal(thin_field(path3, rows, 1.0), rows)
    assert not thin_field(path3, rows, 0.0).any()
    f = BinaryField(path3, [1, 0, 1])
    assert thin_field(path3, f, {"a": 1.0, "c": 0.0}).as_dict() == {"a": 1, "b": 0, "c": 0}
    with pytest.raises(ValueError):
        thin_field(path3, rows, 1.5)


def test_thinned_shearer_law(path3):
    draw = thinned(make_sampler("shearer", path3, [0.2] * 3), path3, 0.5)
    rows = draw(N, 13)
    T = z_table(path3, [0.1] * 3)
    av = _avoidance(rows, 3)
    assert all(_close(av[S], T[S], N) for S in range(8))


def test_thinned_shearer_random_p():
    rng = np.random.default_rng(14)
    sp = line_space([0.0, 0.4, 0.9, 1.3, 2.0])
    m = np.array([0.2, 0.15, 0.2, 0.1, 0.25])
    p = rng.random(5)
    rows = thin_field(sp, sample_shearer(sp, m, seed=14, size=N), p, seed=15)
    T = z_table(sp, p * m)
    av = _avoidance(rows, 5)
    assert all(_close(av[S], T[S], N) for S in range(32))


# ---------------------------------------------------------------- Matern


def test_matern_isolated_atom():
    sp = line_space([0.0, 2.0])
    for v in ("I", "II", "III"):
        rows = sample_matern(sp, [0.3, 0.6], v, seed=16, size=20_000)
        assert _close(rows[:, 0].mean(), 0.3, 20_000) and _close(rows[:, 1].mean(), 0.6, 20_000)


def test_matern_targets():
    assert matern_target_intensity_path3("I", 0.3, 0.3, 0.3) == pytest.approx((0.21, 0.147, 0.21))
    II = matern_target_intensity_path3("II", 0.3, 0.3, 0.3)
    assert II[0] == pytest.approx(0.255) and II[1] == pytest.approx(0.2566875)
    assert matern_target_intensity_path3("III", 0.3, 0.3, 0.3)[0] == pytest.approx(0.26175)
    for v in ("I", "II", "III"):
        m1, _, m3 = matern_target_intensity_path3(v, 0.4, 0.0, 0.7)
        assert m1 == pytest.approx(0.4) and m3 == pytest.approx(0.7)
    with pytest.raises(ValueError):
        matern_target_intensity_path3("I", 1.2, 0.3, 0.3)


def test_matern_exact_enumeration_by_hand(path3):
    n = (0.3, 0.3, 0.3)
    assert matern_exact_intensities(path3, n, "I") == pytest.approx([0.21, 0.147, 0.21])
    # II ends: kept unless the middle is present with a smaller mark
    got = matern_exact_intensities(path3, n, "II")
    assert got[0] == pytest.approx(0.3 * (1 - 0.3 / 2))
    # II middle: each present end beats it with probability 1/2, jointly 1/3 when both are present
    mid = 0.3 * (0.49 + 2 * 0.21 * 0.5 + 0.09 / 3)
    assert got[1] == pytest.approx(mid)


@pytest.mark.parametrize("variant", ["I", "II", "III"])
def test_matern_sampler_matches_enumeration(path3, variant):
    n = (0.3, 0.5, 0.4)
    rows = sample_matern(path3, n, variant, seed=17, size=N)
    exact = matern_exact_intensities(path3, n, variant)
    for i in range(3):
        assert _close(rows[:, i].mean(), exact[i], N)
    assert not (rows[:, 0] & rows[:, 1]).any()


def test_matern_I_breaks_one_dependence(path3):
    rows = sample_matern(path3, (0.3, 0.3, 0.3), "I", seed=18, size=N)
    rep = empirical_stats(rows, N, 18, [Query(QueryKind.DEPENDENCE, ("a",), ("c",))], path3)
    e = rep.estimates[0]
    assert e.extra["p_AB"] == pytest.approx(0.643, abs=0.01)
    assert e.estimate > 4 * e.stderr


# ---------------------------------------------------------------- hard sphere


def test_hard_sphere_zero_fugacity(single):
    cfg, used = sample_hard_sphere(single, [0.0], seed=19)
    assert len(cfg) == 0 and used == 1
    cfg, used = sample_hard_sphere(GridRegion(1, (0.0,), (2.0,), 0.1, 0.0), 0.0)
    assert len(cfg) == 0 and used == 1


def test_hard_sphere_unit_region(pair):
    run = hard_sphere_run(pair, [0.5, 0.5], N, seed=20)
    f, se = run.empty_frequency()
    assert abs(f - 0.5) <= 4 * se
    est, se = run.partition_estimate()
    assert abs(est - hard_sphere_partition(pair, [0.5, 0.5])) <= 4 * se


def test_hard_sphere_far_atoms():
    sp = line_space([0.0, 2.0])
    rows = make_sampler("hardsphere", sp, [0.5, 0.5])(N, 21)
    rep = empirical_stats(rows, N, 21, [Query(QueryKind.DEPENDENCE, ("p0",), ("p1",))], sp)
    assert rep.estimates[0].estimate <= 4 * rep.estimates[0].stderr


def test_hard_sphere_continuum():
    cfg, used = sample_hard_sphere(((0.0,), (3.0,)), 0.3, seed=22)
    assert cfg.is_hard_core and used >= 1


# ---------------------------------------------------------------- zero phase


def test_zero_phase_pair(pair):
    rows, plan = construct_zero_phase(pair, [0.6, 0.6], seed=23, size=N)
    assert plan.Lambda == pytest.approx(5 / 6, abs=1e-9)
    assert plan.witness.ids == ("a", "b")
    assert rows.any(axis=1).all()
    for i in range(2):
        assert _close(rows[:, i].mean(), 0.6, N)


def test_zero_phase_mass_one():
    sp = line_space([0.0, 0.5, 3.0])
    rows, plan = construct_zero_phase(sp, [0.2, 1.0, 0.4], seed=24, size=1000)
    assert plan.deterministic and plan.witness.ids == ("p1",)
    assert rows[:, 1].all()


def test_zero_phase_needs_zero_phase(pair):
    with pytest.raises(ValueError):
        construct_zero_phase(pair, [0.3, 0.3])


def test_zero_phase_separated_pair_independent():
    sp = line_space([0.0, 0.5, 3.0])
    rows, _ = construct_zero_phase(sp, [0.6, 0.6, 0.4], seed=25, size=N)
    rep = empirical_stats(rows, N, 25, [Query(QueryKind.DEPENDENCE, ("p0", "p1"), ("p2",))], sp)
    e = rep.estimates[0]
    assert e.estimate <= 4 * e.stderr
    assert rows[:, :2].any(axis=1).all()


# ---------------------------------------------------------------- law-level checks


def _queries(sp, never_empty=None):
    out = []
    for A in range(1, 1 << sp.n):
        if sp.is_clique(A):
            for B in range(1 << sp.n):
                # conditioning on a region that is never empty is undefined
                if never_empty is not None and B & never_empty == never_empty:
                    continue
                out.append(Query(QueryKind.AVOIDANCE_SLACK, sp.ids_of(A), sp.ids_of(B)))
    return out


@pytest.mark.parametrize("model", ["shearer", "zerodep", "zerophase"])
def test_avoidance_slack_nonnegative(model):
    sp = line_space([0.0, 0.6, 1.2, 1.9])
    m = [0.3, 0.25, 0.3, 0.2] if model != "zerophase" else [0.6, 0.6, 0.3, 0.2]
    rep = empirical_stats(make_sampler(model, sp, m), 50_000, 26, _queries(sp, 0b11 if model == "zerophase" else None), sp, measure=m)
    for e in rep.estimates:
        assert e.estimate >= -4 * e.stderr - 1e-12


@pytest.mark.parametrize("model", ["shearer", "zerodep", "matern1", "matern2", "matern3"])
def test_minimal_conditional_avoidance(model):
    # two far unit cliques, so every Matern variant is 1-dependent here
    sp = line_space([0.0, 0.5, 3.0, 3.5])
    under = np.array([0.2, 0.15, 0.25, 0.3])
    rows = make_sampler(model, sp, under)(N, 27)
    variant = {"matern1": "I", "matern2": "II", "matern3": "III"}.get(model)
    m = under if variant is None else matern_exact_intensities(sp, under, variant)
    T = z_table(sp, m)
    assert np.all(T > 0)
    for B in range(1 << sp.n):
        empty_b = ~rows[:, [i for i in range(sp.n) if B >> i & 1]].any(axis=1)
        k = int(empty_b.sum())
        for A in range(1, 1 << sp.n):
            joint = ~rows[:, [i for i in range(sp.n) if (A | B) >> i & 1]].any(axis=1)
            z = T[A | B] / T[B]
            se = math.sqrt(max(z * (1 - z), 1e-12) / k)
            assert joint.sum() / k >= z - 4 * se
