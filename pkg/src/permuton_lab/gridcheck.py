"""Uniform b x b grid: diagonal-occupancy lower bound and box-path upper bound on LIS.

Boxes are half-open on the low side, ``((i-1)/b, i/b]``, with the first box
also containing 0, so every point lands in exactly one box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .core import PointSet
from .errors import InvariantViolation, ParameterOutOfRange
from .lis import lis_points

DENSE_MAX_B = 4096


def grid_side(N: int, alpha: float) -> int:
    """floor(N ** (1/(alpha+2))), computed robustly near integer values."""
    if N < 1:
        raise ParameterOutOfRange(f"N must be >= 1, got {N}")
    if not (-1.0 < alpha < 0.0):
        raise ParameterOutOfRange(f"need -1 < alpha < 0, got {alpha}")
    b = int(math.floor(N ** (1.0 / (alpha + 2.0))))
    # guard against rounding on exact powers: b^(alpha+2) <= N < (b+1)^(alpha+2)
    p = alpha + 2.0
    while b > 1 and b**p > N * (1 + 1e-12):
        b -= 1
    while (b + 1) ** p <= N * (1 + 1e-12):
        b += 1
    return max(1, b)


@dataclass(frozen=True, eq=False)
class GridCounts:
    """Occupied boxes of a b x b grid in sparse form (1-based indices)."""

    b: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    total: int

    @classmethod
    def from_dense(cls, counts) -> "GridCounts":
        m = np.asarray(counts, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError("counts must be a non-empty square matrix")
        if (m < 0).any():
            raise ValueError("counts must be non-negative")
        i, j = np.nonzero(m)
        return cls(m.shape[0], i + 1, j + 1, m[i, j], int(m.sum()))

    @property
    def counts(self) -> np.ndarray:
        """Dense matrix, ``counts[i-1, j-1]`` = points in box (i, j)."""
        if self.b > DENSE_MAX_B:
            raise MemoryError(f"dense grid with b={self.b} is too large")
        m = np.zeros((self.b, self.b), dtype=np.int64)
        m[self.rows - 1, self.cols - 1] = self.values
        return m

    def count(self, i: int, j: int) -> int:
        hit = (self.rows == i) & (self.cols == j)
        return int(self.values[hit].sum())

    def diagonal(self) -> np.ndarray:
        d = np.zeros(self.b, dtype=np.int64)
        on = self.rows == self.cols
        d[self.rows[on] - 1] = self.values[on]
        return d


def box_index(v: np.ndarray, b: int) -> np.ndarray:
    return np.clip(np.ceil(np.asarray(v) * b).astype(np.int64), 1, b)


def bin_points(ps: PointSet, b: int) -> GridCounts:
    if b < 1:
        raise ParameterOutOfRange(f"b must be >= 1, got {b}")
    i = box_index(ps.xs, b)
    j = box_index(ps.ys, b)
    key = (i - 1) * b + (j - 1)
    uniq, cnt = np.unique(key, return_counts=True)
    return GridCounts(b, uniq // b + 1, uniq % b + 1, cnt.astype(np.int64), len(ps))


def diag_lower_bound(g: GridCounts) -> int:
    return int(np.count_nonzero((g.rows == g.cols) & (g.values > 0)))


@nb.njit(cache=True)
def _sparse_chain(rows, cols, values, b):
    # cells sorted by (row, col); Fenwick tree of prefix maxima over columns
    n = rows.shape[0]
    tree_val = np.zeros(b + 1, dtype=np.int64)
    tree_arg = np.full(b + 1, -1, dtype=np.int64)
    best = np.zeros(n, dtype=np.int64)
    prev = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        j = cols[k]
        m = 0
        arg = -1
        q = j
        while q > 0:
            if tree_val[q] > m:
                m = tree_val[q]
                arg = tree_arg[q]
            q -= q & (-q)
        best[k] = m + values[k]
        prev[k] = arg
        q = j
        while q <= b:
            if best[k] > tree_val[q]:
                tree_val[q] = best[k]
                tree_arg[q] = k
            q += q & (-q)
    top = 0
    end = -1
    for k in range(n):
        if best[k] > top:
            top = best[k]
            end = k
    length = 0
    while end >= 0:
        length += 1
        end = prev[end]
    return top, length


def path_upper_bound_with_chain(g: GridCounts) -> tuple[int, int]:
    """Maximum count over increasing box sequences and the number of boxes used."""
    if g.values.size == 0:
        return 0, 0
    order = np.lexsort((g.cols, g.rows))
    top, length = _sparse_chain(
        np.ascontiguousarray(g.rows[order]),
        np.ascontiguousarray(g.cols[order]),
        np.ascontiguousarray(g.values[order]),
        g.b,
    )
    return int(top), int(length)


def path_upper_bound(g: GridCounts) -> int:
    return path_upper_bound_with_chain(g)[0]


@nb.njit(cache=True)
def _staircase_dp(c):
    b = c.shape[0]
    M = np.zeros((b + 1, b + 1), dtype=np.int64)
    for i in range(1, b + 1):
        for j in range(1, b + 1):
            M[i, j] = c[i - 1, j - 1] + max(M[i - 1, j], M[i, j - 1])
    return M[b, b]


def staircase_dp(g: GridCounts) -> int:
    """Dense right/up lattice-path DP; same value as :func:`path_upper_bound`."""
    return int(_staircase_dp(g.counts))


def path_upper_bound_exhaustive(g: GridCounts) -> int:
    """Maximum over every sequence of distinct boxes increasing in both indices.

    Enumerates all chains explicitly by depth-first search (no DP reuse).
    """
    if g.b > 4:
        raise ParameterOutOfRange("exhaustive enumeration supports b <= 4")
    m = g.counts
    boxes = [(i, j) for i in range(g.b) for j in range(g.b)]
    best = 0

    def extend(last: int, total: int) -> None:
        nonlocal best
        best = max(best, total)
        i0, j0 = boxes[last] if last >= 0 else (0, 0)
        for k in range(last + 1, len(boxes)):
            i, j = boxes[k]
            if i >= i0 and j >= j0:
                extend(k, total + int(m[i, j]))

    extend(-1, 0)
    return best


@dataclass(frozen=True)
class SandwichReport:
    N: int
    alpha: float
    b: int
    lower: int
    lis: int
    upper: int
    chain_cap: int

    @property
    def envelope_ratio(self) -> float:
        """upper / (b log^2 N), recorded for the log-squared envelope."""
        if self.N < 2:
            return float("nan")
        return self.upper / (self.b * math.log(self.N) ** 2)

    def row(self, seed=None) -> dict:
        return {
            "N": self.N,
            "alpha": self.alpha,
            "b": self.b,
            "lower": self.lower,
            "lis": self.lis,
            "upper": self.upper,
            "chain_cap": self.chain_cap,
            "seed": seed,
        }


def sandwich_check(ps: PointSet, alpha: float, b: int | None = None) -> SandwichReport:
    """Check lower <= LIS <= upper and that the optimal box chain has < 2b boxes."""
    if b is None:
        b = grid_side(max(1, len(ps)), alpha)
    g = bin_points(ps, b)
    if g.total != len(ps):
        raise InvariantViolation(f"grid counts sum to {g.total}, expected {len(ps)}")
    lower = diag_lower_bound(g)
    upper, chain = path_upper_bound_with_chain(g)
    lis = lis_points(ps).length
    if not (lower <= lis <= upper):
        raise InvariantViolation(f"sandwich failed: {lower} <= {lis} <= {upper}")
    if chain >= 2 * b:
        raise InvariantViolation(f"box chain of length {chain} >= 2b = {2 * b}")
    return SandwichReport(len(ps), float(alpha), b, lower, lis, upper, chain)
