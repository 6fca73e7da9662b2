"""The five sampling density families and their normalization machinery.

Families and their exact (normalized) representatives on the unit square:

* ``uniform``          rho = 1
* ``ref``              rho = sum_k u_k^{-1} 1[C_k],  C_k = [S_{k-1}, S_k]^2,
                       u_k proportional to k^-beta log(k+1)^gamma
* ``corner-radial``    rho = c_f d^alpha,  d = (1-x) + (1-y)
* ``corner-pinched``   rho = c_f d^kappa exp(-c |x-y| d^kappa),  kappa = beta/(1-beta)
* ``diag-power``       rho = c_f |x-y|^alpha

For the corner families it is convenient to work in corner coordinates
u = 1-x, v = 1-y and the rotated pair t = u+v, s = v-u (so dx dy = dt ds / 2).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import ClassVar, NamedTuple

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .core import Point
from .errors import ParameterOutOfRange, SingularPoint

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_HEAD_SIZE = 1 << 20
_MIN_HEAD_SIZE = 64
_EXACT_INT_LIMIT = float(1 << 52)

_GL_NODES, _GL_WEIGHTS = np.polynomial.laguerre.laggauss(100)


# ---------------------------------------------------------------------------
# Family descriptions
# ---------------------------------------------------------------------------


def _num(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


@dataclass(frozen=True)
class DensityFamily:
    tag: ClassVar[str] = ""
    name: ClassVar[str] = ""

    def params(self) -> dict[str, float]:
        return {}

    def spec(self) -> str:
        p = self.params()
        if not p:
            return self.name
        return self.name + ":" + ",".join(f"{k}={_num(v)}" for k, v in p.items())

    def __str__(self) -> str:
        return self.spec()

    def density(self, xs, ys) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def singular(self, xs, ys) -> np.ndarray:
        return np.zeros(np.broadcast(xs, ys).shape, dtype=bool)


@dataclass(frozen=True)
class Uniform(DensityFamily):
    tag: ClassVar[str] = "Uniform"
    name: ClassVar[str] = "uniform"

    def density(self, xs, ys) -> np.ndarray:
        return np.ones(np.broadcast(np.asarray(xs), np.asarray(ys)).shape)


@dataclass(frozen=True)
class RefPermuton(DensityFamily):
    """Reference permuton: uniform mass u_k on an increasing chain of squares."""

    beta: float
    gamma: float = 0.0
    tag: ClassVar[str] = "RefPermuton"
    name: ClassVar[str] = "ref"

    def __post_init__(self):
        _check_ref_params(self.beta, self.gamma)

    def params(self):
        return {"beta": self.beta, "gamma": self.gamma}

    @property
    def weights(self) -> "RefWeights":
        return build_ref_weights(self.beta, self.gamma)

    def density(self, xs, ys) -> np.ndarray:
        return self.weights.density(xs, ys)


@dataclass(frozen=True)
class CornerRadial(DensityFamily):
    alpha: float
    tag: ClassVar[str] = "CornerRadial"
    name: ClassVar[str] = "corner-radial"

    def __post_init__(self):
        if not (self.alpha > -2):
            raise ParameterOutOfRange(f"corner-radial needs alpha > -2, got {self.alpha}")

    def params(self):
        return {"alpha": self.alpha}

    @property
    def normalizer(self) -> float:
        return 1.0 / corner_radial_total(self.alpha)

    def density(self, xs, ys) -> np.ndarray:
        d = (1.0 - np.asarray(xs, float)) + (1.0 - np.asarray(ys, float))
        with np.errstate(divide="ignore"):
            return self.normalizer * np.power(d, self.alpha)

    def singular(self, xs, ys):
        d = (1.0 - np.asarray(xs, float)) + (1.0 - np.asarray(ys, float))
        return (d == 0) & (self.alpha < 0)


@dataclass(frozen=True)
class CornerPinched(DensityFamily):
    beta: float
    c: float = 1.0
    tag: ClassVar[str] = "CornerPinched"
    name: ClassVar[str] = "corner-pinched"

    def __post_init__(self):
        if not (self.beta > 1):
            raise ParameterOutOfRange(f"corner-pinched needs beta > 1, got {self.beta}")
        if not (self.c > 0):
            raise ParameterOutOfRange(f"corner-pinched needs c > 0, got {self.c}")

    def params(self):
        return {"beta": self.beta, "c": self.c}

    @property
    def kappa(self) -> float:
        return self.beta / (1.0 - self.beta)

    @property
    def normalizer(self) -> float:
        return 1.0 / corner_pinched_total(self.beta, self.c)

    def density(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, float)
        ys = np.asarray(ys, float)
        d = (1.0 - xs) + (1.0 - ys)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            dk = np.power(d, self.kappa)
            val = self.normalizer * dk * np.exp(-self.c * np.abs(xs - ys) * dk)
        return np.where(np.isnan(val), 0.0, val)

    def singular(self, xs, ys):
        d = (1.0 - np.asarray(xs, float)) + (1.0 - np.asarray(ys, float))
        return d == 0


@dataclass(frozen=True)
class DiagonalPower(DensityFamily):
    alpha: float
    tag: ClassVar[str] = "DiagonalPower"
    name: ClassVar[str] = "diag-power"

    def __post_init__(self):
        if not (-1 < self.alpha < 0):
            raise ParameterOutOfRange(f"diag-power needs -1 < alpha < 0, got {self.alpha}")

    def params(self):
        return {"alpha": self.alpha}

    @property
    def normalizer(self) -> float:
        return (self.alpha + 1.0) * (self.alpha + 2.0) / 2.0

    def density(self, xs, ys) -> np.ndarray:
        z = np.abs(np.asarray(xs, float) - np.asarray(ys, float))
        with np.errstate(divide="ignore"):
            return self.normalizer * np.power(z, self.alpha)

    def singular(self, xs, ys):
        return np.asarray(xs, float) == np.asarray(ys, float)


FAMILIES: dict[str, type[DensityFamily]] = {
    cls.name: cls for cls in (Uniform, RefPermuton, CornerRadial, CornerPinched, DiagonalPower)
}

FAMILY_GRAMMAR = (
    "uniform | ref:beta=B[,gamma=G] | corner-radial:alpha=A | "
    "corner-pinched:beta=B[,c=C] | diag-power:alpha=A"
)

_PARAM_RE = re.compile(r"^\s*([a-z]+)\s*=\s*([-+0-9.eE]+)\s*$")


def parse_family(text: str) -> DensityFamily:
    """Parse the textual family form, e.g. ``ref:beta=1.5,gamma=0``."""
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; expected {FAMILY_GRAMMAR}")
    kwargs: dict[str, float] = {}
    if rest.strip():
        for part in rest.split(","):
            m = _PARAM_RE.match(part)
            if not m:
                raise ValueError(f"bad parameter {part!r} in {text!r}; expected {FAMILY_GRAMMAR}")
            kwargs[m.group(1)] = float(m.group(2))
    cls = FAMILIES[name]
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}; expected {FAMILY_GRAMMAR}") from None


def eval_density(f: DensityFamily, p: Point) -> float:
    x, y = float(p[0]), float(p[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError("point outside the unit square")
    if bool(f.singular(x, y)):
        raise SingularPoint(f"{f.spec()} is singular at ({x}, {y})")
    return float(f.density(x, y))


# ---------------------------------------------------------------------------
# Normalizers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def corner_radial_total(alpha: float) -> float:
    """Integral of d^alpha over the unit square (d = L1 distance to (1, 1))."""
    a = float(alpha)
    lower = 1.0 / (a + 2.0)
    if a == -1.0:
        upper = 2.0 * math.log(2.0) - 1.0
    else:
        upper = 2.0 * (2.0 ** (a + 1) - 1.0) / (a + 1.0) - (2.0 ** (a + 2) - 1.0) / (a + 2.0)
    return lower + upper


def pinched_t_profile(t, beta: float, c: float) -> np.ndarray:
    """Unnormalized marginal density of t = u+v, scaled to lie in [0, 1].

    The s-integral of the pinched density is done in closed form, which removes
    the corner singularity: the profile is 1 - exp(-c m(t) t^kappa) with
    m(t) = min(t, 2-t).
    """
    t = np.asarray(t, float)
    kappa = beta / (1.0 - beta)
    m = np.minimum(t, 2.0 - t)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        arg = c * m * np.power(t, kappa)
        out = -np.expm1(-arg)
    return np.where(t <= 0.0, 1.0, np.where(m <= 0.0, 0.0, out))


@lru_cache(maxsize=None)
def corner_pinched_total(beta: float, c: float) -> float:
    """Unnormalized mass of the pinched density on the unit square."""
    g = lambda t: float(pinched_t_profile(t, beta, c))  # noqa: E731
    a, _ = integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    b, _ = integrate.quad(g, 1.0, 2.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return (a + b) / c


# ---------------------------------------------------------------------------
# Reference permuton weights
# ---------------------------------------------------------------------------


def _check_ref_params(beta: float, gamma: float) -> None:
    if not (beta > 1):
        raise ParameterOutOfRange(f"ref needs beta > 1, got {beta}")
    if not (gamma >= 0):
        raise ParameterOutOfRange(f"ref needs gamma >= 0, got {gamma}")


def ref_weight(k, beta: float, gamma: float) -> np.ndarray:
    """Unnormalized box weight k^-beta log(k+1)^gamma (k may be real)."""
    k = np.asarray(k, float)
    w = np.power(k, -beta)
    if gamma:
        w = w * np.power(np.log1p(k), gamma)
    return w


def _tail_integral(a, beta: float, gamma: float) -> np.ndarray:
    """Integral of x^-beta log(x+1)^gamma over [a, inf), for a >= 1.

    With x = a e^s the integral is a^(1-beta) int_0^inf e^{-(beta-1)s} g(s) ds
    where g(s) = (log a + s + log1p(e^-s / a))^gamma is smooth and slowly
    growing, so Gauss-Laguerre quadrature is accurate to rounding level.
    """
    a = np.asarray(a, float)
    pref = np.power(a, 1.0 - beta) / (beta - 1.0)
    if gamma == 0:
        return pref
    s = _GL_NODES.reshape((-1,) + (1,) * a.ndim) / (beta - 1.0)
    g = np.power(np.log(a) + s + np.log1p(np.exp(-s) / a), gamma)
    w = _GL_WEIGHTS.reshape((-1,) + (1,) * a.ndim)
    return pref * np.sum(w * g, axis=0)


def _weight_derivatives(x, beta: float, gamma: float):
    """f, f' and f''' for f(x) = x^-beta log(x+1)^gamma, via log-derivatives."""
    x = np.asarray(x, float)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        f = ref_weight(x, beta, gamma)
        h1 = -beta / x
        h2 = beta / x**2
        h3 = -2.0 * beta / x**3
        if gamma:
            L = np.log1p(x)
            q = L * (x + 1.0)
            h1 = h1 + gamma / q
            h2 = h2 - gamma * (1.0 + L) / q**2
            h3 = h3 - gamma * (1.0 / ((x + 1.0) * q**2) - 2.0 * (1.0 + L) ** 2 / q**3)
        f1 = f * h1
        f3 = f * (h3 + 3.0 * h1 * h2 + h1**3)
    return f, np.nan_to_num(f1), np.nan_to_num(f3)


def ref_tail_sum(n, beta: float, gamma: float) -> np.ndarray:
    """sum_{k > n} k^-beta log(k+1)^gamma for n >= _MIN_HEAD_SIZE.

    Euler-Maclaurin at a = n + 1 with terms through f''' ; the first omitted
    term is O(a^-6) relative, below 1e-13 for a >= 64.
    """
    a = np.asarray(n, float) + 1.0
    f, f1, f3 = _weight_derivatives(a, beta, gamma)
    return _tail_integral(a, beta, gamma) + f / 2.0 - f1 / 12.0 + f3 / 720.0


def tail_asymptotic(beta: float, gamma: float, n) -> np.ndarray | float:
    """n^(1-beta) log(n)^gamma / (beta-1), the leading tail asymptotic."""
    if not (beta > 1):
        raise ParameterOutOfRange(f"tail_asymptotic needs beta > 1, got {beta}")
    n_arr = np.asarray(n, float)
    val = np.power(n_arr, 1.0 - beta) / (beta - 1.0)
    if gamma:
        val = val * np.power(np.log(n_arr), gamma)
    return float(val) if np.ndim(val) == 0 else val


class Box(NamedTuple):
    """Square ``[lower.x, upper.x] x [lower.y, upper.y]`` with its index."""

    index: int
    lower: Point
    upper: Point


@dataclass(frozen=True, eq=False)
class RefWeights:
    """Box masses of the reference permuton.

    The first ``K`` masses are tabulated (``u[k-1] = u_k``, ``S[n] = S_n``,
    ``R[n] = R_n`` for n <= K). Boxes beyond K are handled analytically through
    the Euler-Maclaurin tail, so the law is exact up to index ``K_max``; the
    mass beyond ``K_max`` (``tail_mass``) is discarded and the rest renormalized.
    """

    beta: float
    gamma: float
    Z: float
    u: np.ndarray
    S: np.ndarray
    R: np.ndarray
    K_max: float
    tail_mass: float
    tail_tol: float
    _inv_tail: PchipInterpolator = field(repr=False)

    @property
    def K(self) -> int:
        return int(self.u.size)

    @property
    def head_tail_mass(self) -> float:
        """R_K: mass carried by boxes beyond the tabulated head."""
        return float(self.R[-1])

    def u_at(self, k) -> np.ndarray:
        k = np.asarray(k)
        return ref_weight(k, self.beta, self.gamma) / self.Z

    def R_at(self, n) -> np.ndarray:
        """R_n = sum_{k>n} u_k, tabulated in the head, analytic beyond."""
        n = np.asarray(n, float)
        out = np.empty(n.shape)
        head = n <= self.K
        out[head] = self.R[n[head].astype(np.int64)]
        if np.any(~head):
            out[~head] = ref_tail_sum(n[~head], self.beta, self.gamma) / self.Z
        return out

    def S_at(self, n) -> np.ndarray:
        n = np.asarray(n, float)
        out = 1.0 - self.R_at(n)
        head = n <= self.K
        out[head] = self.S[n[head].astype(np.int64)]
        return out

    def tail_index(self, r) -> np.ndarray:
        """Box index k > K with R_k < r <= R_{k-1}, for r in (tail_mass, R_K].

        Exact for indices below 2^52; beyond that the boxes are narrower than
        double resolution near 1 and the continuous inverse is returned.
        """
        r = np.asarray(r, float)
        rho = r * self.Z
        n = np.exp(self._inv_tail(-np.log(rho)))
        n = np.maximum(n, float(self.K))
        for _ in range(3):
            g = ref_tail_sum(n, self.beta, self.gamma)
            n = np.maximum(n + (g - rho) / ref_weight(n + 0.5, self.beta, self.gamma), float(self.K))
        k = np.ceil(n)
        k = np.maximum(k, self.K + 1.0)
        exact = k < _EXACT_INT_LIMIT
        if np.any(exact):
            ke = k[exact]
            re_ = r[exact]
            for _ in range(8):
                up = self.R_at(ke) >= re_
                if not up.any():
                    break
                ke = ke + up
            for _ in range(8):
                down = (ke > self.K + 1) & (self.R_at(ke - 1.0) < re_)
                if not down.any():
                    break
                ke = ke - down
            k[exact] = ke
        return k

    def box(self, n: int) -> Box:
        """Box C_n = [S_{n-1}, S_n]^2."""
        if n < 1 or n > self.K_max:
            raise ParameterOutOfRange(f"box index must be in 1..K_max, got {n}")
        lo, hi = (float(v) for v in self.S_at(np.array([n - 1.0, float(n)])))
        return Box(int(n), Point(lo, lo), Point(hi, hi))

    def box_of(self, xs) -> np.ndarray:
        """Index k of the box whose x-range [S_{k-1}, S_k) contains each x."""
        xs = np.asarray(xs, float)
        k = np.searchsorted(self.S, xs, side="right").astype(float)
        tail = xs >= self.S[-1]
        if np.any(tail):
            r = np.clip(1.0 - xs[tail], max(self.tail_mass, 1e-300), self.head_tail_mass)
            k[tail] = self.tail_index(r)
        return k

    def density(self, xs, ys) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, float))
        ys = np.atleast_1d(np.asarray(ys, float))
        xs, ys = np.broadcast_arrays(xs, ys)
        k = self.box_of(xs)
        lo = self.S_at(k - 1.0)
        hi = self.S_at(k)
        inside = (ys >= lo) & (ys <= hi)
        out = np.where(inside, 1.0 / self.u_at(k), 0.0)
        return out if out.size > 1 else out.reshape(())


@lru_cache(maxsize=16)
def build_ref_weights(
    beta: float,
    gamma: float = 0.0,
    tail_tol: float = DEFAULT_TAIL_TOL,
    head_size: int = DEFAULT_HEAD_SIZE,
) -> RefWeights:
    """Normalizer, box masses and tail machinery for the reference permuton."""
    beta = float(beta)
    gamma = float(gamma)
    _check_ref_params(beta, gamma)
    if not (0 < tail_tol < 1):
        raise ParameterOutOfRange(f"tail_tol must be in (0, 1), got {tail_tol}")
    if head_size < _MIN_HEAD_SIZE:
        raise ParameterOutOfRange(f"head_size must be >= {_MIN_HEAD_SIZE}")

    k = np.arange(1, head_size + 1, dtype=float)
    w = ref_weight(k, beta, gamma)
    head_tail = float(ref_tail_sum(float(head_size), beta, gamma))
    Z = math.fsum(w) + head_tail

    # K_max: first power-of-two multiple of the head whose tail is below tol
    n = 2.0 * head_size
    tail = float(ref_tail_sum(n, beta, gamma))
    while tail / Z >= tail_tol:
        n *= 2.0
        if n > 1e300:
            raise ParameterOutOfRange(
                f"tail of ref:beta={beta},gamma={gamma} cannot reach {tail_tol} in double precision"
            )
        tail = float(ref_tail_sum(n, beta, gamma))
    K_max = n
    tail_mass = tail / Z

    wl = w.astype(np.longdouble)
    S = np.empty(head_size + 1)
    S[0] = 0.0
    S[1:] = (np.cumsum(wl) / Z).astype(float)
    R = np.empty(head_size + 1)
    R[-1] = head_tail / Z
    R[:-1] = ((np.cumsum(wl[::-1])[::-1] + np.longdouble(head_tail)) / Z).astype(float)

    # monotone table of log n against -log(tail) for inverting the tail sum
    steps = max(2, int(math.ceil(math.log2(K_max / head_size) * 32)) + 1)
    log_n = np.linspace(math.log(head_size), math.log(K_max), steps)
    log_g = np.log(ref_tail_sum(np.exp(log_n), beta, gamma))
    inv = PchipInterpolator(-log_g, log_n, extrapolate=True)

    u = w / Z
    for arr in (u, S, R):
        arr.flags.writeable = False
    return RefWeights(beta, gamma, Z, u, S, R, K_max, tail_mass, tail_tol, inv)


# ---------------------------------------------------------------------------
# Masses of axis-parallel rectangles
# ---------------------------------------------------------------------------


def box_mass_diag_power(alpha: float, b: int, k: int) -> float:
    """Normalized mass of the diagonal grid box C_{k,k} of a b x b grid."""
    if not (-1 < alpha < 0):
        raise ParameterOutOfRange(f"need -1 < alpha < 0, got {alpha}")
    if not (1 <= k <= b):
        raise ParameterOutOfRange(f"need 1 <= k <= b, got k={k}, b={b}")
    lo, hi = (k - 1) / b, k / b
    return rect_mass(DiagonalPower(alpha), lo, hi, lo, hi)


def _diag_power_rect(alpha, x0, x1, y0, y1):
    p = alpha + 2.0
    P = lambda z: abs(z) ** p  # noqa: E731
    return (P(x1 - y0) - P(x0 - y0) - P(x1 - y1) + P(x0 - y1)) / 2.0


def _corner_radial_rect(alpha, u0, u1, v0, v1):
    if alpha == -1.0:
        Phi = lambda t: t * math.log(t) - t if t > 0 else 0.0  # noqa: E731
    else:
        Phi = lambda t: t ** (alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0))  # noqa: E731
    val = Phi(u1 + v1) - Phi(u0 + v1) - Phi(u1 + v0) + Phi(u0 + v0)
    return val / corner_radial_total(alpha)


def _corner_pinched_rect(fam: CornerPinched, u0, u1, v0, v1):
    kappa, c = fam.kappa, fam.c

    def inner(t):
        # (1/2) t^kappa int_lo^hi exp(-c t^kappa |s|) ds, written as
        # Q(hi) - Q(lo) with Q(s) = sign(s) (1 - exp(-lam |s|)) / (2c)
        if t <= 0.0:
            return 0.0
        lo = max(t - 2.0 * u1, 2.0 * v0 - t)
        hi = min(t - 2.0 * u0, 2.0 * v1 - t)
        if hi <= lo:
            return 0.0
        with np.errstate(over="ignore"):
            lam = c * np.power(t, kappa)

        def Q(s):
            if s == 0.0:
                return 0.0
            return math.copysign(-math.expm1(-lam * abs(s)), s)

        return (Q(hi) - Q(lo)) / (2.0 * c)

    pts = sorted({u0 + v0, u1 + v0, u0 + v1, u1 + v1})
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        if b > a:
            val, _ = integrate.quad(inner, a, b, epsabs=1e-15, epsrel=1e-11, limit=400)
            total += val
    return total * fam.normalizer


def _cover_fraction(lo, hi, a, b):
    side = hi - lo
    ov = np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)
    frac = np.divide(ov, side, out=np.zeros_like(ov), where=side > 0)
    return np.where((lo >= a) & (hi <= b), 1.0, np.minimum(frac, 1.0))


def _ref_rect(w: RefWeights, x0, x1, y0, y1):
    S = w.S
    # box k meets the rectangle only if it meets both coordinate intervals
    k0 = max(int(np.searchsorted(S, max(x0, y0), side="right")) - 1, 0)
    k1 = min(int(np.searchsorted(S, min(x1, y1), side="left")), S.size - 1)
    lo, hi, u = S[k0:k1], S[k0 + 1 : k1 + 1], w.u[k0:k1]
    # overlap fractions per axis; fully covered boxes count exactly u_k so that
    # rounding in S does not leak into the masses of tiny boxes
    total = math.fsum(u * _cover_fraction(lo, hi, x0, x1) * _cover_fraction(lo, hi, y0, y1))
    s_k = S[-1]
    covers = x0 <= s_k and y0 <= s_k and x1 >= 1.0 and y1 >= 1.0
    disjoint = x1 <= s_k or y1 <= s_k
    if covers:
        total += w.head_tail_mass
    elif not disjoint:
        raise ValueError("rectangle cuts through the analytic tail region of the reference permuton")
    return total


def rect_mass(f: DensityFamily, x0: float, x1: float, y0: float, y1: float) -> float:
    """Normalized mass of [x0, x1] x [y0, y1] under family ``f``."""
    if isinstance(f, Uniform):
        return (x1 - x0) * (y1 - y0)
    if isinstance(f, DiagonalPower):
        return _diag_power_rect(f.alpha, x0, x1, y0, y1)
    if isinstance(f, CornerRadial):
        return _corner_radial_rect(f.alpha, 1.0 - x1, 1.0 - x0, 1.0 - y1, 1.0 - y0)
    if isinstance(f, CornerPinched):
        return _corner_pinched_rect(f, 1.0 - x1, 1.0 - x0, 1.0 - y1, 1.0 - y0)
    if isinstance(f, RefPermuton):
        return _ref_rect(f.weights, x0, x1, y0, y1)
    raise TypeError(f"unsupported family {f!r}")


def grid_masses(f: DensityFamily, cells: int) -> np.ndarray:
    """cells x cells matrix of rectangle masses; entry [i, j] is x-cell i, y-cell j."""
    edges = np.linspace(0.0, 1.0, cells + 1)
    out = np.empty((cells, cells))
    for i in range(cells):
        for j in range(cells):
            out[i, j] = rect_mass(f, edges[i], edges[i + 1], edges[j], edges[j + 1])
    return out
