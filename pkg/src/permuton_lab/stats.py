"""Monte Carlo LIS estimates, growth-exponent fits and concentration checks."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .densities import DensityFamily
from .errors import DegenerateDesign, ParameterOutOfRange, SizeLimitExceeded
from .lis import lis_length_array, lis_xy
from .samplers import RngStream, sample_arrays

EXACT_ELL_MAX_N = 8


@dataclass(frozen=True)
class EstimateRecord:
    family: DensityFamily
    N: int
    replicates: int
    mean_lis: float
    std_lis: float
    stderr: float
    seed: int

    def row(self) -> dict:
        return {
            "family": self.family.spec(),
            "N": self.N,
            "replicates": self.replicates,
            "mean_lis": self.mean_lis,
            "std_lis": self.std_lis,
            "stderr": self.stderr,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FitResult:
    exponent: float
    log_coeff: float
    intercept: float
    r_squared: float
    n_points: int
    family: str = ""

    def row(self) -> dict:
        return {
            "family": self.family,
            "exponent": self.exponent,
            "log_coeff": self.log_coeff,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class ConcentrationRow:
    lam: float
    empirical_tail: float
    empirical_upper: float
    empirical_lower: float
    mcdiarmid_bound: float
    talagrand_upper: float
    talagrand_lower: float
    median: float


@dataclass(frozen=True)
class ConcentrationReport:
    family: DensityFamily
    N: int
    replicates: int
    mean: float
    stderr: float
    median: float
    rows: tuple[ConcentrationRow, ...]
    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    def csv_rows(self) -> list[dict]:
        return [
            {
                "family": self.family.spec(),
                "N": self.N,
                "lambda": r.lam,
                "empirical_tail": r.empirical_tail,
                "mcdiarmid": r.mcdiarmid_bound,
                "talagrand_up": r.talagrand_upper,
                "talagrand_down": r.talagrand_lower,
                "median": r.median,
                "empirical_up": r.empirical_upper,
                "empirical_down": r.empirical_lower,
            }
            for r in self.rows
        ]


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def replicate_lis(family: DensityFamily, N: int, seed: int, stream_id: int) -> int:
    xs, ys = sample_arrays(family, N, RngStream(seed, stream_id))
    return lis_xy(xs, ys)


def lis_samples(
    family: DensityFamily, N: int, replicates: int, seed: int, threads: int = 1
) -> np.ndarray:
    """LIS of ``replicates`` independent samples; replicate r uses stream r."""
    if N < 1:
        raise ValueError("N must be >= 1")
    run = lambda r: replicate_lis(family, N, seed, r)  # noqa: E731
    if threads <= 1:
        out = [run(r) for r in range(replicates)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, range(replicates)))
    return np.asarray(out, dtype=np.int64)


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = math.fsum(values.tolist()) / n
    var = math.fsum(((values - mean) ** 2).tolist()) / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var)


def summarize(family: DensityFamily, N: int, seed: int, values: np.ndarray) -> EstimateRecord:
    mean, std = _mean_std(np.asarray(values, dtype=float))
    R = int(values.size)
    return EstimateRecord(family, N, R, mean, std, std / math.sqrt(R), seed)


def estimate(
    family: DensityFamily, N: int, replicates: int, seed: int, threads: int = 1
) -> EstimateRecord:
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    return summarize(family, N, seed, lis_samples(family, N, replicates, seed, threads))


def estimate_grid(
    family: DensityFamily, Ns: Sequence[int], replicates: int, seed: int, threads: int = 1
) -> list[EstimateRecord]:
    return [estimate(family, int(N), replicates, seed, threads) for N in Ns]


def exact_small_ell(N: int) -> Fraction:
    """Exact E[LIS] of a uniform permutation of size N by enumeration."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > EXACT_ELL_MAX_N:
        raise SizeLimitExceeded(f"exact enumeration supports N <= {EXACT_ELL_MAX_N}, got {N}")
    total = 0
    count = 0
    for p in permutations(range(1, N + 1)):
        total += int(lis_length_array(np.array(p, dtype=np.int64)))
        count += 1
    return Fraction(total, count)


# ---------------------------------------------------------------------------
# Exponent fits
# ---------------------------------------------------------------------------


def fit_exponent(records: Sequence[EstimateRecord], with_log_correction: bool = False) -> FitResult:
    """Fit log mean = exponent log N [+ log_coeff log log N] + intercept.

    Weighted least squares with weights 1/se_log^2 where se_log = stderr/mean
    is the delta-method standard error of log(mean_lis); falls back to equal
    weights when any stderr is zero (noise-free input).
    """
    if len(records) < 3:
        raise DegenerateDesign("need at least 3 records")
    fams = {r.family.spec() for r in records}
    if len(fams) != 1:
        raise ValueError(f"records mix families: {sorted(fams)}")
    Ns = np.array([r.N for r in records], dtype=float)
    if np.unique(Ns).size != Ns.size:
        raise ValueError("records must have distinct N")
    mean = np.array([r.mean_lis for r in records], dtype=float)
    se = np.array([r.stderr for r in records], dtype=float)
    if np.any(mean <= 0):
        raise ValueError("mean_lis must be positive")

    logN = np.log(Ns)
    cols = [logN]
    if with_log_correction:
        if np.any(Ns <= 1):
            raise DegenerateDesign("log log N needs N > 1")
        cols.append(np.log(logN))
    cols.append(np.ones_like(logN))
    X = np.column_stack(cols)
    y = np.log(mean)

    if np.all(se > 0):
        w = (mean / se) ** 2
    else:
        w = np.ones_like(y)
    sw = np.sqrt(w / w.sum())
    Xw = X * sw[:, None]
    yw = y * sw
    if np.linalg.matrix_rank(Xw) < X.shape[1] or np.linalg.cond(Xw) > 1e12:
        raise DegenerateDesign("N values do not determine the regression")
    coef, *_ = np.linalg.lstsq(Xw, yw, rcond=None)

    resid = y - X @ coef
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * resid**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    return FitResult(
        exponent=float(coef[0]),
        log_coeff=float(coef[1]) if with_log_correction else 0.0,
        intercept=float(coef[-1]),
        r_squared=r2,
        n_points=len(records),
        family=next(iter(fams)),
    )


# ---------------------------------------------------------------------------
# Concentration inequalities
# ---------------------------------------------------------------------------


def mcdiarmid_bound(N: int, lam: float) -> float:
    """Two-sided bounded-differences tail bound for LIS (c = 1)."""
    return 2.0 * math.exp(-2.0 * lam * lam / N)


def talagrand_upper_bound(median: float, lam: float) -> float:
    return 2.0 * math.exp(-lam * lam / (4.0 * (median + lam)))


def talagrand_lower_bound(median: float, lam: float) -> float:
    if median <= 0:
        return 2.0
    return 2.0 * math.exp(-lam * lam / (4.0 * median))


def bernstein_bound(n: int, p: float, t: float) -> float:
    """Bound on P(|Bin(n, p) - np| >= t)."""
    if n < 1 or not (0.0 < p < 1.0) or not (t > 0):
        raise ParameterOutOfRange(f"need n >= 1, 0 < p < 1, t > 0; got n={n}, p={p}, t={t}")
    return 2.0 * math.exp(-(t * t / 2.0) / (n * p * (1.0 - p) + t / 3.0))


def default_lambdas(N: int) -> list[float]:
    """Deviation grid scaled by sqrt(N), the McDiarmid scale."""
    root = math.sqrt(N)
    return sorted({float(max(1, round(q * root))) for q in (0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0)})


def _binom_exceeds(p_hat: float, bound: float, R: int, nsigma: float = 3.0) -> bool:
    se = math.sqrt(p_hat * (1.0 - p_hat) / R)
    return p_hat - nsigma * se > bound


def concentration_from_samples(
    family: DensityFamily,
    N: int,
    values: np.ndarray,
    lambdas: Sequence[float],
    check: str = "both",
) -> ConcentrationReport:
    """Empirical tails of LIS against the McDiarmid and Talagrand bounds.

    The true mean is replaced by the sample mean, and each mean-centred
    deviation is widened by one standard error of that mean.
    """
    L = np.asarray(values, dtype=float)
    R = L.size
    mean, std = _mean_std(L)
    stderr = std / math.sqrt(R)
    med = float(np.median(L))
    rows = []
    violations = []
    for lam in lambdas:
        lam = float(lam)
        tail = float(np.mean(np.abs(L - mean) > lam + stderr))
        up = float(np.mean(L >= med + lam))
        down = float(np.mean(L <= med - lam))
        mb = mcdiarmid_bound(N, lam)
        tu = talagrand_upper_bound(med, lam)
        td = talagrand_lower_bound(med, lam)
        rows.append(ConcentrationRow(lam, tail, up, down, mb, tu, td, med))
        if check in ("both", "mcdiarmid") and _binom_exceeds(tail, mb, R):
            violations.append(f"mcdiarmid N={N} lambda={lam}: {tail} > {mb}")
        if check in ("both", "talagrand"):
            if _binom_exceeds(up, tu, R):
                violations.append(f"talagrand-up N={N} lambda={lam}: {up} > {tu}")
            if _binom_exceeds(down, td, R):
                violations.append(f"talagrand-down N={N} lambda={lam}: {down} > {td}")
    return ConcentrationReport(family, N, R, mean, stderr, med, tuple(rows), tuple(violations))


def _concentration(family, N, replicates, lambdas, seed, threads, check):
    values = lis_samples(family, N, replicates, seed, threads)
    lams = default_lambdas(N) if lambdas is None else list(lambdas)
    return concentration_from_samples(family, N, values, lams, check)


def mcdiarmid_check(
    family: DensityFamily,
    N: int,
    replicates: int,
    lambdas: Sequence[float] | None = None,
    seed: int = 0,
    threads: int = 1,
) -> ConcentrationReport:
    return _concentration(family, N, replicates, lambdas, seed, threads, "mcdiarmid")


def talagrand_check(
    family: DensityFamily,
    N: int,
    replicates: int,
    lambdas: Sequence[float] | None = None,
    seed: int = 0,
    threads: int = 1,
) -> ConcentrationReport:
    return _concentration(family, N, replicates, lambdas, seed, threads, "talagrand")


def concentration_check(
    family: DensityFamily,
    N: int,
    replicates: int,
    lambdas: Sequence[float] | None = None,
    seed: int = 0,
    threads: int = 1,
) -> ConcentrationReport:
    return _concentration(family, N, replicates, lambdas, seed, threads, "both")
