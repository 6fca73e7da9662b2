import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permuton_lab.core import PointSet
from permuton_lab.densities import parse_family
from permuton_lab.errors import ParameterOutOfRange
from permuton_lab.gridcheck import (
    GridCounts,
    bin_points,
    diag_lower_bound,
    grid_side,
    path_upper_bound,
    path_upper_bound_exhaustive,
    path_upper_bound_with_chain,
    sandwich_check,
    staircase_dp,
)
from permuton_lab.lis import lis_points
from permuton_lab.samplers import RngStream, sample_set
from permuton_lab.verify import SAMPLER_FAMILIES


def test_grid_side_examples():
    assert grid_side(1, -0.5) == 1
    assert grid_side(10**6, -0.5) == 10_000
    # 10^(5/1.8) = 599.48..., checked in extended precision
    mp.mp.dps = 40
    assert int(mp.floor(mp.mpf(10) ** (mp.mpf(5) / mp.mpf("1.8")))) == 599
    assert grid_side(10**5, -0.2) == 599


@pytest.mark.parametrize("N, alpha", [(0, -0.5), (10, 0.0), (10, -1.0), (10, 0.5)])
def test_grid_side_rejects(N, alpha):
    with pytest.raises(ParameterOutOfRange):
        grid_side(N, alpha)


@pytest.mark.parametrize("N", [2, 17, 1000, 12345, 10**7])
@pytest.mark.parametrize("alpha", [-0.9, -0.5, -0.2])
def test_grid_side_matches_big_float(N, alpha):
    mp.mp.dps = 40
    expected = int(mp.floor(mp.mpf(N) ** (1 / (mp.mpf(alpha) + 2))))
    assert grid_side(N, alpha) == max(1, expected)


def test_bin_points_single_and_boundaries():
    g = bin_points(PointSet([0.1], [0.9]), 2)
    assert g.counts.tolist() == [[0, 1], [0, 0]]
    assert g.count(1, 2) == 1
    g = bin_points(PointSet([0.5, 0.0, 1.0], [0.25, 0.0, 1.0]), 4)
    assert g.count(2, 1) == 1  # x = 2/4 boundary goes to the lower box
    assert g.count(1, 1) == 1 and g.count(4, 4) == 1
    assert g.total == 3 and g.counts.sum() == 3


def test_bin_points_uniform_counts():
    ps = sample_set(parse_family("uniform"), 10**4, RngStream(0, 0))
    c = bin_points(ps, 10).counts
    sd = math.sqrt(10**4 * 0.01 * 0.99)
    assert np.all(np.abs(c - 100) <= 4 * sd)
    assert c.sum() == 10**4


def test_diag_lower_bound_examples():
    assert diag_lower_bound(GridCounts.from_dense(np.zeros((3, 3), int))) == 0
    assert diag_lower_bound(GridCounts.from_dense(np.diag([1, 0, 5]))) == 2


def test_path_upper_bound_examples():
    assert path_upper_bound(GridCounts.from_dense(np.zeros((4, 4), int))) == 0
    m = np.array([[1, 3], [2, 4]])  # m[i-1, j-1] = w(i, j)
    assert path_upper_bound(GridCounts.from_dense(m)) == 8
    assert path_upper_bound(GridCounts.from_dense(np.eye(3, dtype=int))) == 3


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 4).flatmap(lambda b: st.lists(st.integers(0, 6), min_size=b * b, max_size=b * b)))
def test_dp_matches_enumeration(values):
    b = int(round(math.sqrt(len(values))))
    g = GridCounts.from_dense(np.array(values).reshape(b, b))
    assert path_upper_bound(g) == staircase_dp(g) == path_upper_bound_exhaustive(g)


def test_sparse_and_dense_dp_agree_on_large_grids():
    gen = np.random.default_rng(1)
    for _ in range(20):
        b = int(gen.integers(5, 60))
        m = gen.integers(0, 4, (b, b)) * (gen.random((b, b)) < 0.2)
        g = GridCounts.from_dense(m)
        top, chain = path_upper_bound_with_chain(g)
        assert top == staircase_dp(g)
        assert chain < 2 * b


def test_sandwich_single_point():
    r = sandwich_check(PointSet([0.3], [0.6]), -0.5)
    assert r.lower <= 1 == r.lis <= r.upper


@pytest.mark.parametrize("spec", SAMPLER_FAMILIES)
@pytest.mark.parametrize("N", [100, 3_000])
def test_sandwich_on_samples(spec, N):
    for t in range(3):
        ps = sample_set(parse_family(spec), N, RngStream(4, t))
        for b in (1, 3, 17, None):
            r = sandwich_check(ps, -0.5, b)
            assert r.lower <= r.lis <= r.upper
            assert r.chain_cap < 2 * r.b


def test_sandwich_diag_power_envelope_recorded():
    ps = sample_set(parse_family("diag-power:alpha=-0.5"), 10**5, RngStream(4, 99))
    r = sandwich_check(ps, -0.5)
    assert r.b == grid_side(10**5, -0.5)
    assert 0 < r.envelope_ratio < 1


def test_monotone_under_adding_points():
    gen = np.random.default_rng(8)
    xs, ys = list(gen.random(50)), list(gen.random(50))
    prev = (0, 0)
    for k in range(1, 51):
        g = bin_points(PointSet(xs[:k], ys[:k]), 6)
        cur = (diag_lower_bound(g), path_upper_bound(g))
        assert cur[0] >= prev[0] and cur[1] >= prev[1]
        prev = cur


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=40), st.integers(1, 8))
def test_sandwich_any_point_set(points, b):
    ps = PointSet.from_points(points)
    if not ps.has_distinct_coordinates():
        return
    g = bin_points(ps, b)
    assert g.total == len(ps)
    assert diag_lower_bound(g) <= lis_points(ps).length <= path_upper_bound(g)
