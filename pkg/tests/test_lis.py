from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permuton_lab.core import Permutation, PointSet, increasing_pair
from permuton_lab.errors import DuplicateCoordinate, SizeLimitExceeded
from permuton_lab.lis import lis_exhaustive, lis_fast, lis_points, lis_quadratic, lis_xy


def chain_oracle(ps):
    """Largest chain under the strict product order, by brute force over subsets."""
    pts = ps.points
    n = len(pts)
    best = 0
    for mask in range(1 << n):
        sub = sorted(pts[i] for i in range(n) if mask >> i & 1)
        if all(increasing_pair(a, b) for a, b in zip(sub, sub[1:])):
            best = max(best, len(sub))
    return best


ALL = (lambda s: lis_fast(s).length, lis_quadratic, lis_exhaustive)


@pytest.mark.parametrize("f", ALL)
@pytest.mark.parametrize("image, expected", [((2, 4, 1, 3), 2), ((3, 1, 2), 2), ((1, 2, 3, 4, 5), 5)])
def test_small_examples(f, image, expected):
    assert f(Permutation(image)) == expected


@pytest.mark.parametrize("f", ALL)
@pytest.mark.parametrize("n", [1, 2, 7, 15])
def test_identity_and_reversal(f, n):
    assert f(Permutation.identity(n)) == n
    assert f(Permutation.identity(n).reversed()) == 1


def test_empty():
    assert lis_fast(Permutation([])).length == 0
    assert lis_fast(Permutation([]), witness=True).witness == ()


def test_exhaustive_size_guard():
    lis_exhaustive(Permutation.identity(12))
    with pytest.raises(SizeLimitExceeded):
        lis_exhaustive(Permutation.identity(21))


def test_all_permutations_of_six():
    for p in permutations(range(1, 7)):
        s = Permutation(p)
        assert lis_fast(s).length == lis_quadratic(s) == lis_exhaustive(s)


@settings(max_examples=300, deadline=None)
@given(st.permutations(list(range(1, 15))))
def test_witness_is_valid(image):
    s = Permutation(image)
    res = lis_fast(s, witness=True)
    w = res.witness
    assert len(w) == res.length == lis_quadratic(s)
    assert all(a < b for a, b in zip(w, w[1:]))
    assert all(s.image[a] < s.image[b] for a, b in zip(w, w[1:]))


@settings(max_examples=200, deadline=None)
@given(st.permutations(list(range(1, 40))))
def test_bounds_and_reversal_product(image):
    s = Permutation(image)
    n = len(s)
    a = lis_fast(s).length
    assert 1 <= a <= n
    assert a * lis_fast(s.reversed()).length >= n


def test_points_diagonal_antidiagonal():
    t = np.linspace(0.01, 0.99, 50)
    assert lis_points(PointSet(t, t)).length == 50
    assert lis_points(PointSet(t, 1 - t)).length == 1


def test_points_match_chain_oracle():
    gen = np.random.default_rng(3)
    for _ in range(200):
        n = int(gen.integers(1, 11))
        ps = PointSet(gen.random(n), gen.random(n))
        assert lis_points(ps).length == chain_oracle(ps)


def test_point_witness_is_a_chain():
    gen = np.random.default_rng(4)
    ps = PointSet(gen.random(500), gen.random(500))
    res = lis_points(ps, witness=True)
    pts = [ps[i] for i in res.witness]
    assert len(pts) == res.length
    assert all(increasing_pair(a, b) for a, b in zip(pts, pts[1:]))


def test_points_propagate_duplicates():
    with pytest.raises(DuplicateCoordinate):
        lis_points(PointSet([0.2, 0.2], [0.1, 0.5]))


def test_appending_dominating_point_adds_one():
    gen = np.random.default_rng(5)
    for _ in range(100):
        n = int(gen.integers(1, 200))
        xs, ys = gen.random(n) * 0.9, gen.random(n) * 0.9
        base = lis_xy(xs, ys)
        assert lis_xy(np.append(xs, 0.95), np.append(ys, 0.95)) == base + 1


def test_single_point_change_moves_lis_by_at_most_one():
    gen = np.random.default_rng(6)
    for _ in range(10_000):
        n = int(gen.integers(1, 60))
        xs, ys = gen.random(n), gen.random(n)
        base = lis_xy(xs, ys)
        i = int(gen.integers(n))
        xs2, ys2 = xs.copy(), ys.copy()
        xs2[i], ys2[i] = gen.random(), gen.random()
        assert abs(lis_xy(xs2, ys2) - base) <= 1
