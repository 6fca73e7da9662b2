"""Seeded exact samplers for every density family, plus the mixture coupling.

Per-family schemes:

* uniform: two independent uniforms.
* ref: head box index from a Vose alias table, tail index by inverting the
  analytic tail sum; then a uniform point in the box.
* diag-power: |x-y| by inverse CDF (safeguarded Newton), random sign, then x
  uniform on the feasible segment.
* corner-radial: t = u+v by inverse CDF (closed form on [0, 1], Newton on
  [1, 2]), then u uniform on the anti-diagonal slice.
* corner-pinched: t by rejection against a flat envelope (its marginal profile
  is bounded by 1), then s = v-u from a symmetric truncated Laplace law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numba as nb
import numpy as np

from .core import Point, PointSet
from .densities import (
    CornerPinched,
    CornerRadial,
    DensityFamily,
    DiagonalPower,
    RefPermuton,
    RefWeights,
    Uniform,
    corner_radial_total,
    pinched_t_profile,
)
from .errors import ParameterOutOfRange

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Streams are PCG64DXSM generators keyed by ``SeedSequence(seed,
    spawn_key=(stream_id,))``; distinct stream ids give independent streams.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,))
            self._gen = np.random.Generator(np.random.PCG64DXSM(ss))
        return self._gen


def _gen_of(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True)
class MixtureSpec:
    eps: float
    g: DensityFamily
    h: DensityFamily

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise ParameterOutOfRange(f"mixture weight must be in (0, 1), got {self.eps}")


# ---------------------------------------------------------------------------
# Discrete alias tables
# ---------------------------------------------------------------------------


@nb.njit(cache=True)
def _vose(p):
    n = p.shape[0]
    prob = np.empty(n)
    alias = np.zeros(n, dtype=np.int64)
    scaled = p * (n / p.sum())
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        l = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            nl -= 1
            small[ns] = l
            ns += 1
    for i in range(nl):
        prob[large[i]] = 1.0
    for i in range(ns):
        prob[small[i]] = 1.0
    return prob, alias


@nb.njit(cache=True, nogil=True)
def _alias_draw(prob, alias, u):
    n = prob.shape[0]
    out = np.empty(u.shape[0], dtype=np.int64)
    for i in range(u.shape[0]):
        v = u[i] * n
        j = int(v)
        if j >= n:
            j = n - 1
        out[i] = j if (v - j) < prob[j] else alias[j]
    return out


class AliasTable:
    """O(1) sampling from a finite discrete law (0-based outcomes)."""

    def __init__(self, weights):
        p = np.ascontiguousarray(weights, dtype=np.float64)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not p.sum() > 0:
            raise ValueError("weights must be a non-empty non-negative vector")
        self.prob, self.alias = _vose(p)

    def __len__(self) -> int:
        return int(self.prob.size)

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return _alias_draw(self.prob, self.alias, gen.random(n))


@lru_cache(maxsize=16)
def _ref_alias(w: RefWeights) -> AliasTable:
    return AliasTable(w.u)


# ---------------------------------------------------------------------------
# 1-D inversions
# ---------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _diag_abs_gap(u, alpha):
    """|x-y| for diag-power: solve (a+2) w - (a+1) w^p = u, t = w^(1/(a+1))."""
    a1 = alpha + 1.0
    a2 = alpha + 2.0
    p = a2 / a1
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        target = u[i]
        lo = 0.0
        hi = 1.0
        w = target / a2
        for _ in range(200):
            g = a2 * w - a1 * w**p - target
            if g < 0.0:
                lo = w
            else:
                hi = w
            d = a2 * (1.0 - w ** (p - 1.0))
            step_ok = False
            if d > 0.0:
                wn = w - g / d
                if lo < wn < hi:
                    step_ok = True
            if not step_ok:
                wn = 0.5 * (lo + hi)
            if abs(wn - w) <= 1e-15 * w or hi - lo <= 1e-17:
                w = wn
                break
            w = wn
        out[i] = w ** (1.0 / a1)
    return out


@nb.njit(cache=True, nogil=True)
def _radial_upper_t(v, alpha):
    """t in [1, 2] with int_1^t (2-s) s^alpha ds = v (v within total range)."""
    out = np.empty(v.shape[0])
    for i in range(v.shape[0]):
        target = v[i]
        lo = 1.0
        hi = 2.0
        t = 1.0 + 0.5 * target
        if t > 2.0:
            t = 1.5
        for _ in range(200):
            if alpha == -1.0:
                h = 2.0 * np.log(t) - (t - 1.0)
            else:
                h = 2.0 * (t ** (alpha + 1.0) - 1.0) / (alpha + 1.0) - (
                    t ** (alpha + 2.0) - 1.0
                ) / (alpha + 2.0)
            g = h - target
            if g < 0.0:
                lo = t
            else:
                hi = t
            d = (2.0 - t) * t**alpha
            step_ok = False
            if d > 0.0:
                tn = t - g / d
                if lo < tn < hi:
                    step_ok = True
            if not step_ok:
                tn = 0.5 * (lo + hi)
            if abs(tn - t) <= 1e-15 or hi - lo <= 1e-15:
                t = tn
                break
            t = tn
        out[i] = t
    return out


# ---------------------------------------------------------------------------
# Raw per-family draws (no collision handling)
# ---------------------------------------------------------------------------


def _draw_uniform(f, n, gen):
    return gen.random(n), gen.random(n)


def _draw_ref(f: RefPermuton, n, gen):
    w = f.weights
    table = _ref_alias(w)
    xs = np.empty(n)
    ys = np.empty(n)
    sel = gen.random(n)
    tail = sel < w.head_tail_mass
    head = ~tail
    nh = int(head.sum())
    k = table.draw(gen, nh)
    lo = w.S[k]
    width = w.u[k]
    xs[head] = lo + width * gen.random(nh)
    ys[head] = lo + width * gen.random(nh)
    nt = n - nh
    if nt:
        # sel is uniform on [0, R_K) given the tail, so R_K - sel is uniform on (0, R_K]
        r = w.head_tail_mass - sel[tail]
        bad = r <= w.tail_mass
        while bad.any():
            r[bad] = w.head_tail_mass * (1.0 - gen.random(int(bad.sum())))
            bad = r <= w.tail_mass
        kt = w.tail_index(r)
        ry = w.R_at(kt) + w.u_at(kt) * gen.random(nt)
        xs[tail] = 1.0 - r
        ys[tail] = 1.0 - ry
    np.clip(xs, 0.0, 1.0, out=xs)
    np.clip(ys, 0.0, 1.0, out=ys)
    return xs, ys


def _draw_diag_power(f: DiagonalPower, n, gen):
    t = _diag_abs_gap(gen.random(n), f.alpha)
    z = np.where(gen.random(n) < 0.5, t, -t)
    lo = np.maximum(0.0, z)
    hi = np.minimum(1.0, 1.0 + z)
    xs = lo + (hi - lo) * gen.random(n)
    ys = np.clip(xs - z, 0.0, 1.0)
    return xs, ys


def _draw_corner_radial(f: CornerRadial, n, gen):
    a = f.alpha
    total = corner_radial_total(a)
    v = gen.random(n) * total
    t = np.empty(n)
    low = v < 1.0 / (a + 2.0)
    # on [0, 1]: int_0^t s^(a+1) ds = t^(a+2)/(a+2)
    t[low] = np.power(v[low] * (a + 2.0), 1.0 / (a + 2.0))
    t[~low] = _radial_upper_t(v[~low] - 1.0 / (a + 2.0), a)
    u_lo = np.maximum(0.0, t - 1.0)
    u_hi = np.minimum(1.0, t)
    u = u_lo + (u_hi - u_lo) * gen.random(n)
    vv = np.clip(t - u, 0.0, 1.0)
    return np.clip(1.0 - u, 0.0, 1.0), 1.0 - vv


def _draw_corner_pinched(f: CornerPinched, n, gen):
    beta, c, kappa = f.beta, f.c, f.kappa
    t = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        batch = max(64, int(need * 2.5))
        cand = 2.0 * gen.random(batch)
        acc = cand[gen.random(batch) < pinched_t_profile(cand, beta, c)]
        take = min(acc.size, need)
        t[filled : filled + take] = acc[:take]
        filled += take
    m = np.minimum(t, 2.0 - t)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        lam = c * np.power(t, kappa)
        w = gen.random(n)
        mag = -np.log1p(w * np.expm1(-lam * m)) / lam
    mag = np.where(np.isfinite(mag), np.minimum(mag, m), 0.0)
    s = np.where(gen.random(n) < 0.5, mag, -mag)
    u = np.clip(0.5 * (t - s), 0.0, 1.0)
    v = np.clip(0.5 * (t + s), 0.0, 1.0)
    return 1.0 - u, 1.0 - v


_DRAW = {
    Uniform: _draw_uniform,
    RefPermuton: _draw_ref,
    DiagonalPower: _draw_diag_power,
    CornerRadial: _draw_corner_radial,
    CornerPinched: _draw_corner_pinched,
}


def draw_raw(f: DensityFamily, n: int, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``n`` i.i.d. coordinates from ``f`` without enforcing distinctness."""
    try:
        fn = _DRAW[type(f)]
    except KeyError:
        raise TypeError(f"no sampler for {f!r}") from None
    if n == 0:
        return np.empty(0), np.empty(0)
    return fn(f, n, gen)


# ---------------------------------------------------------------------------
# Public sampling API
# ---------------------------------------------------------------------------


def _later_duplicates(a: np.ndarray) -> np.ndarray:
    """Mask of entries equal to an entry appearing earlier in ``a``."""
    order = np.argsort(a, kind="stable")
    s = a[order]
    dup = np.zeros(a.size, dtype=bool)
    dup[order[1:][s[1:] == s[:-1]]] = True
    return dup


def _has_ties(a: np.ndarray) -> bool:
    s = np.sort(a)
    return bool(np.any(s[1:] == s[:-1]))


def _redraw_ties(xs, ys, redraw) -> None:
    """Re-draw, in place, every point that repeats an earlier x or y value."""
    while xs.size > 1 and (_has_ties(xs) or _has_ties(ys)):
        bad = np.flatnonzero(_later_duplicates(xs) | _later_duplicates(ys))
        nx, ny = redraw(bad)
        xs[bad] = nx
        ys[bad] = ny


def sample_arrays(f: DensityFamily, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate arrays of ``n`` i.i.d. points with all coordinates distinct."""
    if n < 0:
        raise ValueError("n must be non-negative")
    gen = _gen_of(rng)
    xs, ys = draw_raw(f, n, gen)
    _redraw_ties(xs, ys, lambda bad: draw_raw(f, bad.size, gen))
    return xs, ys


def sample_point(f: DensityFamily, rng) -> Point:
    xs, ys = draw_raw(f, 1, _gen_of(rng))
    return Point(float(xs[0]), float(ys[0]))


def sample_set(f: DensityFamily, N: int, rng) -> PointSet:
    if N < 1:
        raise ValueError("N must be >= 1")
    return PointSet(*sample_arrays(f, N, rng))


def sample_mixture(m: MixtureSpec, N: int, rng) -> tuple[PointSet, np.ndarray]:
    """N points from eps*g + (1-eps)*h together with the Bernoulli(eps) flags.

    Flagged points are draws from ``g``, the others from ``h``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    gen = _gen_of(rng)
    flags = gen.random(N) < m.eps
    xs = np.empty(N)
    ys = np.empty(N)
    xs[flags], ys[flags] = draw_raw(m.g, int(flags.sum()), gen)
    xs[~flags], ys[~flags] = draw_raw(m.h, int((~flags).sum()), gen)

    def redraw(bad):
        nx = np.empty(bad.size)
        ny = np.empty(bad.size)
        fb = flags[bad]
        nx[fb], ny[fb] = draw_raw(m.g, int(fb.sum()), gen)
        nx[~fb], ny[~fb] = draw_raw(m.h, int((~fb).sum()), gen)
        return nx, ny

    _redraw_ties(xs, ys, redraw)
    flags.flags.writeable = False
    return PointSet(xs, ys), flags
