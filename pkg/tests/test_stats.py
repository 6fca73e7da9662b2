import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from permuton_lab.core import Permutation
from permuton_lab.densities import parse_family
from permuton_lab.errors import DegenerateDesign, ParameterOutOfRange, SizeLimitExceeded
from permuton_lab.lis import lis_exhaustive
from permuton_lab.samplers import RngStream
from permuton_lab.stats import (
    EstimateRecord,
    bernstein_bound,
    concentration_from_samples,
    default_lambdas,
    estimate,
    estimate_grid,
    exact_small_ell,
    fit_exponent,
    lis_samples,
    mcdiarmid_bound,
    mcdiarmid_check,
    talagrand_check,
    talagrand_lower_bound,
    talagrand_upper_bound,
)

UNI = parse_family("uniform")


def records(means, Ns, fam=UNI, stderr=0.0):
    return [EstimateRecord(fam, int(N), 10, float(m), 0.0, stderr, 0) for m, N in zip(means, Ns)]


# --- exact small-N values ---------------------------------------------------------


def test_exact_small_ell_values():
    assert exact_small_ell(1) == 1
    assert exact_small_ell(2) == Fraction(3, 2)
    assert exact_small_ell(3) == 2
    with pytest.raises(SizeLimitExceeded):
        exact_small_ell(9)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_exact_small_ell_matches_exhaustive(n):
    vals = [lis_exhaustive(Permutation(p)) for p in permutations(range(1, n + 1))]
    assert exact_small_ell(n) == Fraction(sum(vals), len(vals))


@pytest.mark.parametrize("n", [2, 3])
def test_estimate_matches_exact(n):
    r = estimate(UNI, n, 20_000, seed=3)
    assert abs(r.mean_lis - float(exact_small_ell(n))) <= 3 * r.stderr


# --- estimates ----------------------------------------------------------------------


def test_estimate_record_invariants():
    r = estimate(parse_family("diag-power:alpha=-0.5"), 500, 40, seed=1)
    assert 1 <= r.mean_lis <= 500
    assert r.stderr == pytest.approx(r.std_lis / math.sqrt(40))
    assert r.row()["family"] == "diag-power:alpha=-0.5"


def test_estimate_is_deterministic_and_thread_independent():
    fam = parse_family("ref:beta=1.5")
    a = lis_samples(fam, 2000, 12, seed=5, threads=1)
    b = lis_samples(fam, 2000, 12, seed=5, threads=3)
    assert np.array_equal(a, b)
    assert estimate(fam, 2000, 12, 5) == estimate(fam, 2000, 12, 5, threads=2)
    with pytest.raises(ValueError):
        estimate(fam, 100, 1, 5)


def test_replicate_uses_its_own_stream():
    from permuton_lab.lis import lis_xy
    from permuton_lab.samplers import sample_arrays

    vals = lis_samples(UNI, 300, 4, seed=11)
    assert vals[2] == lis_xy(*sample_arrays(UNI, 300, RngStream(11, 2)))


def test_means_increase_with_n():
    recs = estimate_grid(UNI, [2**k for k in range(6, 13)], 64, seed=2)
    means = [r.mean_lis for r in recs]
    assert all(b >= a for a, b in zip(means, means[1:]))


# --- exponent fits ----------------------------------------------------------------


Ns = [2**k for k in range(8, 16)]


def test_fit_exact_power_law():
    res = fit_exponent(records([2 * math.sqrt(N) for N in Ns], Ns))
    assert res.exponent == pytest.approx(0.5, abs=1e-12)
    assert res.intercept == pytest.approx(math.log(2), abs=1e-10)
    assert res.r_squared == pytest.approx(1.0)
    assert res.log_coeff == 0.0 and res.n_points == len(Ns)


def test_fit_with_log_correction_recovers_model():
    res = fit_exponent(records([N**0.7 * math.log(N) for N in Ns], Ns), with_log_correction=True)
    assert res.exponent == pytest.approx(0.7, abs=1e-6)
    assert res.log_coeff == pytest.approx(1.0, abs=1e-6)


def test_fit_invariances():
    gen = np.random.default_rng(0)
    means = [N**0.6 * (1 + 0.05 * gen.standard_normal()) for N in Ns]
    se = [0.01 * m * (1 + gen.random()) for m in means]
    recs = [EstimateRecord(UNI, N, 64, m, s * 8, s, 0) for N, m, s in zip(Ns, means, se)]
    base = fit_exponent(recs, True)
    scaled = fit_exponent([EstimateRecord(UNI, r.N, 64, 3 * r.mean_lis, 3 * r.std_lis, 3 * r.stderr, 0) for r in recs], True)
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-10)
    assert scaled.log_coeff == pytest.approx(base.log_coeff, abs=1e-9)
    assert scaled.intercept == pytest.approx(base.intercept + math.log(3), abs=1e-9)
    shuffled = fit_exponent([recs[i] for i in gen.permutation(len(recs))], True)
    assert shuffled.exponent == pytest.approx(base.exponent, abs=1e-12)


def test_fit_weights_favour_precise_points():
    means = [N**0.5 for N in Ns]
    means[0] *= 1.5
    loose = [EstimateRecord(UNI, N, 64, m, 1.0, 1e3 if i == 0 else 1e-3, 0) for i, (N, m) in enumerate(zip(Ns, means))]
    assert fit_exponent(loose).exponent == pytest.approx(0.5, abs=1e-3)


def test_fit_errors():
    with pytest.raises(DegenerateDesign):
        fit_exponent(records([1, 2], [10, 20]))
    with pytest.raises(ValueError):
        fit_exponent(records([1, 2, 3], [10, 10, 20]))
    mixed = records([1, 2], [10, 20]) + records([3], [40], fam=parse_family("ref:beta=2"))
    with pytest.raises(ValueError):
        fit_exponent(mixed)
    with pytest.raises(DegenerateDesign):
        fit_exponent(records([1, 2, 3], [1, 2, 3]), with_log_correction=True)


# --- concentration bounds -------------------------------------------------------------


def test_bound_values():
    assert mcdiarmid_bound(100, 20) == pytest.approx(2 * math.exp(-8))
    assert round(mcdiarmid_bound(100, 20), 7) == 6.709e-4
    assert mcdiarmid_bound(100, 0) == 2.0
    assert talagrand_upper_bound(200, 100) == pytest.approx(2 * math.exp(-10000 / 1200))
    assert talagrand_upper_bound(200, 100) == pytest.approx(4.8e-4, rel=0.01)
    assert talagrand_upper_bound(200, 0) == talagrand_lower_bound(200, 0) == 2.0
    assert bernstein_bound(100, 0.1, 10) == pytest.approx(2 * math.exp(-50 / (9 + 10 / 3)), rel=1e-15)
    assert bernstein_bound(100, 0.1, 10) == pytest.approx(0.0347, abs=5e-5)


def test_bernstein_monotone_and_guards():
    vals = [bernstein_bound(100, 0.1, t) for t in (1, 5, 10, 50, 200, 1e3, 1e6)]
    assert all(a > b for a, b in zip(vals[:5], vals[1:5]))
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-100
    for args in ((0, 0.1, 1), (10, 0.0, 1), (10, 1.0, 1), (10, 0.5, 0)):
        with pytest.raises(ParameterOutOfRange):
            bernstein_bound(*args)


def test_bernstein_against_binomial_simulation():
    gen = np.random.default_rng(1)
    n, p = 10**4, 0.01
    draws = gen.binomial(n, p, size=10**5)
    for t in (20, 30, 50):
        assert np.mean(np.abs(draws - n * p) >= t) <= bernstein_bound(n, p, t)


def test_default_lambdas():
    lams = default_lambdas(10**4)
    assert lams == sorted(set(lams)) and lams[0] >= 1 and max(lams) == 100


def test_report_fields_and_zero_lambda():
    values = np.array([10, 11, 12, 12, 13, 20])
    rep = concentration_from_samples(UNI, 100, values, [0.0, 1.0, 50.0])
    for row in rep.rows:
        assert 0 <= row.empirical_tail <= 1 and row.mcdiarmid_bound > 0
        assert row.talagrand_upper > 0 and row.talagrand_lower > 0
    assert rep.rows[0].mcdiarmid_bound == 2.0
    assert rep.median == 12.0 and rep.ok
    assert rep.csv_rows()[0]["lambda"] == 0.0


def test_violation_is_flagged():
    # LIS sample with a huge spread relative to N cannot satisfy the bound
    values = np.array([1] * 500 + [100] * 500)
    rep = concentration_from_samples(UNI, 100, values, [30.0])
    assert not rep.ok


def test_mcdiarmid_and_talagrand_hold_for_uniform():
    rep = mcdiarmid_check(UNI, 1000, 2000, None, seed=4)
    assert rep.ok and rep.replicates == 2000
    rep = talagrand_check(UNI, 1000, 2000, [5, 10, 20], seed=4)
    assert rep.ok
    assert all(r.empirical_upper <= r.talagrand_upper for r in rep.rows)
