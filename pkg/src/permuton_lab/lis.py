"""Longest increasing subsequences.

``lis_fast`` is patience sorting with binary search over pile tops; the
quadratic DP and the exhaustive subset search are kept as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
import numba as nb
import numpy as np

from .core import Permutation, PointSet, perm_of_points
from .errors import SizeLimitExceeded

EXHAUSTIVE_MAX_N = 20


@dataclass(frozen=True)
class LisResult:
    """LIS length plus, optionally, 0-based positions ``i_1 < ... < i_k``."""

    length: int
    witness: tuple[int, ...] | None = None


@nb.njit(cache=True, nogil=True)
def _lower_bound(tops, n, v):
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if tops[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@nb.njit(cache=True, nogil=True)
def lis_length_array(seq):
    """Length of the longest strictly increasing subsequence of ``seq``."""
    n = seq.shape[0]
    if n == 0:
        return 0
    tops = np.empty(n, dtype=seq.dtype)
    piles = 0
    for i in range(n):
        v = seq[i]
        if piles == 0 or tops[piles - 1] < v:
            tops[piles] = v
            piles += 1
        else:
            tops[_lower_bound(tops, piles, v)] = v
    return piles


@nb.njit(cache=True, nogil=True)
def _lis_witness(seq):
    n = seq.shape[0]
    tops = np.empty(n, dtype=seq.dtype)
    top_idx = np.empty(n, dtype=np.int64)
    prev = np.full(n, -1, dtype=np.int64)
    piles = 0
    for i in range(n):
        v = seq[i]
        if piles == 0 or tops[piles - 1] < v:
            pos = piles
            piles += 1
        else:
            pos = _lower_bound(tops, piles, v)
        tops[pos] = v
        top_idx[pos] = i
        if pos > 0:
            prev[i] = top_idx[pos - 1]
    out = np.empty(piles, dtype=np.int64)
    j = top_idx[piles - 1] if piles > 0 else -1
    for k in range(piles - 1, -1, -1):
        out[k] = j
        j = prev[j]
    return out


def lis_fast(sigma: Permutation, witness: bool = False) -> LisResult:
    seq = np.ascontiguousarray(sigma.image)
    if not witness:
        return LisResult(int(lis_length_array(seq)))
    if seq.size == 0:
        return LisResult(0, ())
    w = _lis_witness(seq)
    return LisResult(int(w.size), tuple(int(i) for i in w))


@nb.njit(cache=True)
def _lis_quadratic(seq):
    n = seq.shape[0]
    best = np.ones(n, dtype=np.int64)
    out = 0
    for i in range(n):
        for j in range(i):
            if seq[j] < seq[i] and best[j] + 1 > best[i]:
                best[i] = best[j] + 1
        if best[i] > out:
            out = best[i]
    return out


def lis_quadratic(sigma: Permutation) -> int:
    return int(_lis_quadratic(np.ascontiguousarray(sigma.image)))


@nb.njit(cache=True)
def _lis_subsets(seq):
    n = seq.shape[0]
    best = 0
    for mask in range(1 << n):
        size = 0
        last = -1
        ok = True
        for i in range(n):
            if mask >> i & 1:
                if size > 0 and seq[i] <= last:
                    ok = False
                    break
                last = seq[i]
                size += 1
        if ok and size > best:
            best = size
    return best


def lis_exhaustive(sigma: Permutation) -> int:
    """LIS by checking every one of the 2^N subsets of positions."""
    n = len(sigma)
    if n > EXHAUSTIVE_MAX_N:
        raise SizeLimitExceeded(f"exhaustive LIS supports N <= {EXHAUSTIVE_MAX_N}, got {n}")
    return int(_lis_subsets(np.ascontiguousarray(sigma.image)))


def lis_points(ps: PointSet, witness: bool = False) -> LisResult:
    """Largest up-right chain of the points; witness positions index ``ps``.

    Propagates :class:`DuplicateCoordinate` from :func:`perm_of_points`.
    """
    sigma = perm_of_points(ps)
    res = lis_fast(sigma, witness=witness)
    if not witness or not res.witness:
        return res
    order = np.argsort(ps.xs, kind="stable")
    return LisResult(res.length, tuple(int(order[i]) for i in res.witness))


def lis_xy(xs: np.ndarray, ys: np.ndarray) -> int:
    """Fast path on raw coordinate arrays already known to be tie-free."""
    order = np.argsort(xs)
    return int(lis_length_array(np.ascontiguousarray(ys[order])))
