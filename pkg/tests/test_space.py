import numpy as np
import pytest
from hypothesis import given, settings

from shearer.space import (
    AtomicMeasure,
    GridRegion,
    SizeLimitError,
    SpaceError,
    build_space,
    grid_space,
    growth_bound_K,
    kappa,
    unit_sphere,
)

from conftest import brute_kappa, line_space, small_spaces


def test_one_point_space_from_empty_matrix():
    sp = build_space(["a"], [])
    assert sp.n == 1
    assert unit_sphere(sp, "a").ids == ("a",)
    assert growth_bound_K(sp).value == 1


def test_collinear_coordinates():
    sp = build_space(["a", "b", "c"], coordinates=[[0.0], [0.6], [1.2]])
    assert np.allclose(sp.distances, [[0, 0.6, 1.2], [0.6, 0, 0.6], [1.2, 0.6, 0]], rtol=1e-12)
    assert sp.unit_graph_edges() == [("a", "b"), ("b", "c")]
    assert set(unit_sphere(sp, "b").ids) == {"a", "b", "c"}
    assert set(unit_sphere(sp, "a").ids) == {"a", "b"}
    assert kappa(sp).value == 2
    assert growth_bound_K(sp).value == 2


@pytest.mark.parametrize(
    "matrix, pair",
    [
        ([[0, 2, 5], [2, 0, 2], [5, 2, 0]], None),
        ([[0, 0.5], [0.7, 0]], ("a", "b")),
        ([[0, -0.5], [-0.5, 0]], ("a", "b")),
        ([[0.1, 0.5], [0.5, 0]], ("a", "a")),
    ],
)
def test_build_space_rejects_bad_matrices(matrix, pair):
    ids = ["a", "b", "c"][: len(matrix)]
    with pytest.raises(SpaceError) as err:
        build_space(ids, matrix)
    if pair is not None:
        assert all(p in str(err.value) for p in pair)


def test_triangle_check_can_be_skipped():
    sp = build_space(["a", "b", "c"], [[0, 2, 5], [2, 0, 2], [5, 2, 0]], validate_triangle=False)
    assert not sp.triangle_checked


def test_distance_one_is_far():
    sp = build_space(["a", "b"], [[0, 1.0], [1.0, 0]])
    assert sp.unit_graph_edges() == []
    assert kappa(sp).value == 2


def test_kappa_examples():
    sp = line_space([0, 0.6, 1.2])
    assert kappa(sp, []).value == 0
    four = build_space(list("abcd"), np.full((4, 4), 0.4) - 0.4 * np.eye(4))
    assert kappa(four) == (1, True)
    assert kappa(four, mode="greedy") == (1, False)


def test_kappa_size_limit():
    sp = line_space(np.arange(25) * 0.3)
    with pytest.raises(SizeLimitError):
        kappa(sp)
    assert kappa(sp, mode="greedy").value >= 1


def test_K_on_half_grid():
    sp, _ = grid_space(GridRegion(1, (0.0,), (3.0,), 0.5, 0.1))
    assert growth_bound_K(sp).value == 2


def test_grid_space_masses():
    sp, m = grid_space(GridRegion(1, (0.0,), (1.0,), 0.5, 0.2))
    assert sp.n == 2 and np.allclose(m.masses, 0.1)
    sp, m = grid_space(GridRegion(1, (0.0,), (3.0,), 0.5, 0.1))
    assert sp.n == 6 and np.allclose(m.masses, 0.05)
    _, m = grid_space(GridRegion(2, (0.0, 0.0), (1.0, 1.0), 0.5, 0.0))
    assert np.all(m.masses == 0)


def test_grid_cell_limit():
    with pytest.raises(SizeLimitError):
        grid_space(GridRegion(2, (0.0, 0.0), (10.0, 10.0), 0.1, 1.0), max_cells=100)


def test_atomic_measure_validation(path3):
    with pytest.raises(ValueError):
        AtomicMeasure(path3, [0.1, -0.2, 0.1])
    m = AtomicMeasure.from_mapping(path3, {"b": 0.3})
    assert m["b"] == 0.3 and m["a"] == 0
    assert m.total(["a", "b"]) == pytest.approx(0.3)


def test_growth_bound_fails_as_a_power_bound():
    # three points spaced exactly 1 apart: K = 1 but kappa = 3 with diameter 2
    sp = line_space([0, 1, 2])
    assert growth_bound_K(sp).value == 1
    assert sp.diameter(sp.full_mask) == 2
    assert kappa(sp).value == 3


@settings(max_examples=60, deadline=None)
@given(small_spaces(max_n=6))
def test_kappa_matches_partition_search(sm):
    sp, _ = sm
    d = sp.distances
    for S in range(1 << sp.n):
        pts = [i for i in range(sp.n) if S >> i & 1]
        assert kappa(sp, S).value == brute_kappa(d, pts)


@settings(max_examples=60, deadline=None)
@given(small_spaces(max_n=7))
def test_kappa_properties(sm):
    sp, _ = sm
    rng = np.random.default_rng(sp.n)
    for _ in range(10):
        B = int(rng.integers(0, 1 << sp.n))
        A = B & int(rng.integers(0, 1 << sp.n))
        C = int(rng.integers(0, 1 << sp.n)) & ~B
        kb = kappa(sp, B).value
        assert kappa(sp, A).value <= kb
        assert kappa(sp, B | C).value <= kb + kappa(sp, C).value
        assert kappa(sp, B, mode="greedy").value >= kb


@settings(max_examples=40, deadline=None)
@given(small_spaces(max_n=7))
def test_unit_sphere_symmetry(sm):
    sp, _ = sm
    for x in sp.ids:
        U = unit_sphere(sp, x)
        assert x in U
        for y in U.ids:
            assert x in unit_sphere(sp, y)
        assert U.is_unit_diameter() == sp.is_clique(U.mask)
