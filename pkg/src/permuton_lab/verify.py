"""Acceptance suite: numbered checks shared by ``permuton-lab verify`` and the tests.

Each check returns a :class:`CriterionResult`; a check passes only if its
tolerance holds and it finishes inside its runtime budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats as sps

from .core import Permutation
from .densities import (
    DiagonalPower,
    RefPermuton,
    box_mass_diag_power,
    grid_masses,
    parse_family,
    ref_tail_sum,
    tail_asymptotic,
)
from .errors import InvariantViolation
from .gridcheck import (
    GridCounts,
    path_upper_bound,
    path_upper_bound_exhaustive,
    sandwich_check,
)
from .lis import lis_exhaustive, lis_fast, lis_points, lis_quadratic
from .samplers import MixtureSpec, RngStream, sample_arrays, sample_mixture, sample_set
from .stats import (
    concentration_check,
    estimate,
    estimate_grid,
    exact_small_ell,
    fit_exponent,
)

SAMPLER_FAMILIES = (
    "uniform",
    "ref:beta=1.5",
    "ref:beta=2",
    "ref:beta=3",
    "ref:beta=2,gamma=1",
    "diag-power:alpha=-0.5",
    "diag-power:alpha=-0.2",
    "corner-radial:alpha=-1",
    "corner-pinched:beta=1.5,c=1",
)

# (family, target exponent, tolerance)
RATE_TARGETS = {
    3: (
        ("ref:beta=1.5", 2 / 3, 0.06),
        ("ref:beta=2", 0.5, 0.05),
        ("ref:beta=3", 0.5, 0.05),
    ),
    4: (
        ("diag-power:alpha=-0.5", 2 / 3, 0.06),
        ("diag-power:alpha=-0.2", 1 / 1.8, 0.06),
    ),
    5: (
        ("corner-radial:alpha=-1", 0.5, 0.06),
        ("corner-pinched:beta=1.5,c=1", 2 / 3, 0.08),
    ),
}

DEFAULT_N_GRID = tuple(2**k for k in range(12, 20))

# stream ids above this are reserved for checks that are not replicate loops
_AUX_STREAM = 1 << 40


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    elapsed: float
    budget: float
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.title} ({self.elapsed:.1f}s / {self.budget:.0f}s)"

    def row(self) -> dict:
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "elapsed": round(self.elapsed, 3),
            "budget": self.budget,
            "details": "; ".join(self.details),
        }


@dataclass(frozen=True)
class SuiteConfig:
    """Sizes used by the suite; ``primary`` is the full acceptance matrix."""

    seed: int = 1
    threads: int = 1
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    fit_replicates: int = 64
    uniform_n: int = 100_000
    uniform_replicates: int = 200
    small_ell_replicates: int = 20_000
    chi2_draws: int = 1_000_000
    gap_draws: int = 1_000_000
    sandwich_sets: int = 500
    sandwich_sizes: tuple[int, ...] = (100, 1_000, 10_000, 100_000)
    oracle_matrices: int = 200
    concentration_replicates: int = 10_000
    concentration_sizes: tuple[int, ...] = (1_000, 10_000)
    mixture_trials: int = 200
    mixture_n: int = 2_000
    oracle_perms: int = 1000

    @classmethod
    def smoke(cls, seed: int = 1, threads: int = 1) -> "SuiteConfig":
        """Reduced sizes for exercising the plumbing; not an acceptance run."""
        return cls(
            seed=seed,
            threads=threads,
            n_grid=(256, 512, 1024, 2048),
            fit_replicates=8,
            uniform_n=2_000,
            uniform_replicates=20,
            small_ell_replicates=2_000,
            chi2_draws=50_000,
            gap_draws=50_000,
            sandwich_sets=40,
            sandwich_sizes=(100, 1_000),
            oracle_matrices=20,
            concentration_replicates=200,
            concentration_sizes=(200,),
            mixture_trials=20,
            mixture_n=300,
            oracle_perms=50,
        )


def _timed(number: int, title: str, budget: float, body: Callable[[list[str]], bool]) -> CriterionResult:
    t0 = time.perf_counter()
    details: list[str] = []
    ok = bool(body(details))
    elapsed = time.perf_counter() - t0
    if elapsed >= budget:
        details.append(f"runtime {elapsed:.1f}s exceeds budget {budget:.0f}s")
        ok = False
    return CriterionResult(number, title, ok, elapsed, budget, details)


# ---------------------------------------------------------------------------
# 1. LIS oracles
# ---------------------------------------------------------------------------


def check_lis_oracles(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        gen = RngStream(cfg.seed, _AUX_STREAM + 1).generator
        mismatches = 0
        for n in range(1, 13):
            for _ in range(cfg.oracle_perms):
                sigma = Permutation(gen.permutation(n) + 1)
                a = lis_fast(sigma).length
                if not (a == lis_quadratic(sigma) == lis_exhaustive(sigma)):
                    mismatches += 1
        details.append(f"{mismatches} mismatches over {12 * cfg.oracle_perms} permutations")
        return mismatches == 0

    return _timed(1, "LIS oracle equivalence", 10.0, body)


# ---------------------------------------------------------------------------
# 2. Uniform baseline
# ---------------------------------------------------------------------------


def check_uniform_baseline(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        uni = parse_family("uniform")
        ok = True
        rec = estimate(uni, cfg.uniform_n, cfg.uniform_replicates, cfg.seed, cfg.threads)
        ratio = rec.mean_lis / math.sqrt(cfg.uniform_n)
        details.append(f"mean/sqrt(N) = {ratio:.4f} at N={cfg.uniform_n}")
        ok &= 1.90 <= ratio <= 2.00
        for n, exact in ((2, Fraction(3, 2)), (3, Fraction(2))):
            ell = exact_small_ell(n)
            ok &= ell == exact
            r = estimate(uni, n, cfg.small_ell_replicates, cfg.seed, cfg.threads)
            z = abs(r.mean_lis - float(ell)) / r.stderr
            details.append(f"l_{n} exact {ell}, estimate {r.mean_lis:.4f} ({z:.2f} stderr)")
            ok &= z <= 3.0
        return ok

    return _timed(2, "uniform baseline 2 sqrt(N)", 300.0, body)


# ---------------------------------------------------------------------------
# 3-5. Exponent recovery
# ---------------------------------------------------------------------------


def fit_family(spec: str, cfg: SuiteConfig):
    fam = parse_family(spec)
    recs = estimate_grid(fam, cfg.n_grid, cfg.fit_replicates, cfg.seed, cfg.threads)
    return fit_exponent(recs, False), fit_exponent(recs, True)


def _check_rates(number: int, title: str, budget: float, cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        ok = True
        for spec, target, tol in RATE_TARGETS[number]:
            pure, corrected = fit_family(spec, cfg)
            hit = abs(pure.exponent - target) <= tol or abs(corrected.exponent - target) <= tol
            details.append(
                f"{spec}: pure {pure.exponent:.4f}, log-corrected {corrected.exponent:.4f} "
                f"(log_coeff {corrected.log_coeff:.3f}), target {target:.4f} +/- {tol}"
            )
            ok &= hit
        return ok

    return _timed(number, title, budget, body)


def check_ref_rates(cfg: SuiteConfig) -> CriterionResult:
    return _check_rates(3, "reference permuton exponents", 1200.0, cfg)


def check_diag_rates(cfg: SuiteConfig) -> CriterionResult:
    return _check_rates(4, "diagonal power exponents", 1200.0, cfg)


def check_corner_rates(cfg: SuiteConfig) -> CriterionResult:
    return _check_rates(5, "corner family exponents", 1800.0, cfg)


# ---------------------------------------------------------------------------
# 6. Sampler correctness
# ---------------------------------------------------------------------------


def chi_square_grid(spec: str, draws: int, rng, cells: int = 20) -> tuple[float, float, int]:
    """Pearson test of binned draws against exact cell masses.

    Cells with expected count below 5 are pooled into one bin; a draw in a
    cell of zero mass fails outright (p = 0).
    """
    fam = parse_family(spec)
    probs = grid_masses(fam, cells).ravel()
    xs, ys = sample_arrays(fam, draws, rng)
    ix = np.clip(np.ceil(xs * cells).astype(np.int64), 1, cells) - 1
    iy = np.clip(np.ceil(ys * cells).astype(np.int64), 1, cells) - 1
    obs = np.bincount(ix * cells + iy, minlength=cells * cells).astype(float)
    if np.any((probs <= 0) & (obs > 0)):
        return math.inf, 0.0, 0
    exp = probs * draws
    big = exp >= 5
    o = np.append(obs[big], obs[~big].sum())
    e = np.append(exp[big], exp[~big].sum())
    if e[-1] < 5:
        o[-2] += o[-1]
        e[-2] += e[-1]
        o, e = o[:-1], e[:-1]
    e *= o.sum() / e.sum()
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1
    return stat, float(sps.chi2.sf(stat, dof)), dof


def check_samplers(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        ok = True
        for idx, spec in enumerate(SAMPLER_FAMILIES):
            stat, p, dof = chi_square_grid(spec, cfg.chi2_draws, RngStream(cfg.seed, _AUX_STREAM + 100 + idx))
            details.append(f"{spec}: chi2={stat:.1f} dof={dof} p={p:.3g}")
            ok &= p > 1e-4

        n = cfg.gap_draws
        xs, ys = sample_arrays(DiagonalPower(-0.5), n, RngStream(cfg.seed, _AUX_STREAM + 200))
        frac = float(np.mean(np.abs(xs - ys) <= 0.25))
        details.append(f"diag-power -0.5 P(|X-Y|<=0.25) = {frac:.5f}")
        ok &= abs(frac - 0.6875) <= 0.003

        ref = RefPermuton(2.0)
        xs, ys = sample_arrays(ref, n, RngStream(cfg.seed, _AUX_STREAM + 201))
        s1 = ref.weights.S[1]
        box1 = float(np.mean((xs <= s1) & (ys <= s1)))
        details.append(f"ref beta=2 box-1 occupancy = {box1:.5f}")
        ok &= abs(box1 - 0.6079) <= 0.002

        b, alpha = 10, -0.5
        xs, ys = sample_arrays(DiagonalPower(alpha), n, RngStream(cfg.seed, _AUX_STREAM + 202))
        ix = np.clip(np.ceil(xs * b), 1, b)
        iy = np.clip(np.ceil(ys * b), 1, b)
        for k in (1, b // 2, b):
            p_hat = float(np.mean((ix == k) & (iy == k)))
            p = box_mass_diag_power(alpha, b, k)
            se = math.sqrt(p * (1 - p) / n)
            details.append(f"diag box {k}: {p_hat:.5f} vs {p:.5f}")
            ok &= abs(p_hat - p) <= 3 * se
        return ok

    return _timed(6, "sampler correctness", 600.0, body)


# ---------------------------------------------------------------------------
# 7. Grid sandwich
# ---------------------------------------------------------------------------


def _alpha_for(spec: str) -> float:
    fam = parse_family(spec)
    return fam.alpha if isinstance(fam, DiagonalPower) else -0.5


def check_sandwich(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        violations = 0
        for t in range(cfg.sandwich_sets):
            spec = SAMPLER_FAMILIES[t % len(SAMPLER_FAMILIES)]
            N = cfg.sandwich_sizes[(t // len(SAMPLER_FAMILIES)) % len(cfg.sandwich_sizes)]
            ps = sample_set(parse_family(spec), N, RngStream(cfg.seed, _AUX_STREAM + 1000 + t))
            try:
                sandwich_check(ps, _alpha_for(spec))
            except InvariantViolation as exc:
                violations += 1
                details.append(f"{spec} N={N}: {exc}")
        gen = RngStream(cfg.seed, _AUX_STREAM + 2).generator
        mismatches = 0
        for _ in range(cfg.oracle_matrices):
            b = int(gen.integers(1, 5))
            m = gen.integers(0, 6, size=(b, b)) * (gen.random((b, b)) < 0.7)
            g = GridCounts.from_dense(m)
            mismatches += path_upper_bound(g) != path_upper_bound_exhaustive(g)
        details.append(f"{violations} sandwich violations over {cfg.sandwich_sets} sets")
        details.append(f"{mismatches} DP/enumeration mismatches over {cfg.oracle_matrices} matrices")
        return violations == 0 and mismatches == 0

    return _timed(7, "deterministic grid sandwich", 600.0, body)


# ---------------------------------------------------------------------------
# 8. Concentration
# ---------------------------------------------------------------------------


def check_concentration(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        ok = True
        for spec in ("uniform", "ref:beta=1.5"):
            for N in cfg.concentration_sizes:
                rep = concentration_check(
                    parse_family(spec), N, cfg.concentration_replicates, None, cfg.seed, cfg.threads
                )
                worst = max(r.empirical_tail - r.mcdiarmid_bound for r in rep.rows)
                details.append(
                    f"{spec} N={N}: median {rep.median:.0f}, {len(rep.violations)} violations, "
                    f"max(tail - mcdiarmid) {worst:.3g}"
                )
                details.extend(rep.violations)
                ok &= rep.ok
        return ok

    return _timed(8, "concentration bounds", 1800.0, body)


# ---------------------------------------------------------------------------
# 9. Tail asymptotics
# ---------------------------------------------------------------------------


def tail_ratio(beta: float, gamma: float, n: float = 1e5) -> float:
    return float(ref_tail_sum(n, beta, gamma) / tail_asymptotic(beta, gamma, n))


def check_tail_asymptotics(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        ok = True
        for beta in (1.5, 2.0, 3.0):
            for gamma in (0.0, 1.0):
                r = tail_ratio(beta, gamma)
                hit = 0.995 <= r <= 1.005
                details.append(f"beta={beta:g} gamma={gamma:g}: ratio {r:.6f}{'' if hit else ' (outside band)'}")
                ok &= hit
        return ok

    return _timed(9, "reference tail asymptotics", 60.0, body)


# ---------------------------------------------------------------------------
# 10. Mixture coupling
# ---------------------------------------------------------------------------

MIXTURES = (
    (0.3, "ref:beta=1.5", "uniform"),
    (0.5, "uniform", "uniform"),
    (0.2, "diag-power:alpha=-0.5", "corner-radial:alpha=-1"),
    (0.7, "corner-pinched:beta=1.5,c=1", "ref:beta=2"),
)


def check_coupling(cfg: SuiteConfig) -> CriterionResult:
    def body(details):
        bad = 0
        for t in range(cfg.mixture_trials):
            eps, g, h = MIXTURES[t % len(MIXTURES)]
            m = MixtureSpec(eps, parse_family(g), parse_family(h))
            ps, flags = sample_mixture(m, cfg.mixture_n, RngStream(cfg.seed, _AUX_STREAM + 5000 + t))
            full = lis_points(ps).length
            lg = lis_points(ps[flags]).length if flags.any() else 0
            lh = lis_points(ps[~flags]).length if (~flags).any() else 0
            if not (lg <= full and lh <= full and full <= lg + lh):
                bad += 1
                details.append(f"trial {t}: g={lg} h={lh} full={full}")
        details.append(f"{bad} failures over {cfg.mixture_trials} trials")
        return bad == 0

    return _timed(10, "mixture coupling inequalities", 300.0, body)


CHECKS: dict[int, Callable[[SuiteConfig], CriterionResult]] = {
    1: check_lis_oracles,
    2: check_uniform_baseline,
    3: check_ref_rates,
    4: check_diag_rates,
    5: check_corner_rates,
    6: check_samplers,
    7: check_sandwich,
    8: check_concentration,
    9: check_tail_asymptotics,
    10: check_coupling,
}


def run_suite(cfg: SuiteConfig, only=None, report=None) -> list[CriterionResult]:
    out = []
    for number, check in CHECKS.items():
        if only and number not in only:
            continue
        res = check(cfg)
        if report is not None:
            report(res)
        out.append(res)
    return out
