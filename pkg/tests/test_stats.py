import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spiderwalk import analytic
from spiderwalk.analytic import excursion_pmf
from spiderwalk.localtime import leg_occupation_from_ssrw
from spiderwalk.spider import simulate_ssrw
from spiderwalk.stats import (
    TestResult,
    chi_square_pmf,
    counts_of,
    dyadic_minmax,
    ecdf,
    ks_distance,
    ks_one_sample,
    ks_two_sample,
    mean_test,
    minmax_occupation,
    moments,
    quantiles99,
    var_test,
)


def uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


def pmf_sampler(x, p, n, rng):
    # inverse transform on the closed-form pmf
    m = np.arange(0, 2000)
    cdf = np.cumsum(excursion_pmf(x, p, m))
    return np.searchsorted(cdf, rng.random(n), side="right")


# --- KS -----------------------------------------------------------------------------


def test_ks_single_point():
    assert ks_distance([0.5], uniform_cdf) == 0.5


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50))
def test_ks_distance_matches_brute_force(xs):
    grid = np.concatenate([xs, np.nextafter(np.array(xs), -np.inf)])
    f = ecdf(xs)
    brute = np.max(np.abs(f(grid) - uniform_cdf(grid)))
    assert ks_distance(xs, uniform_cdf) == pytest.approx(brute, abs=1e-12)


def test_ks_null_calibration(rng):
    p = np.array([ks_one_sample(rng.random(10**5), uniform_cdf).p_value for _ in range(100)])
    assert 0.01 <= (p < 0.05).mean() <= 0.12


def test_ks_power(rng):
    x = rng.standard_exponential(10**4)
    assert ks_one_sample(x, lambda t: analytic.exponential_cdf(t, 2.0)).p_value < 1e-6


def test_ks_two_sample_identical():
    a = np.arange(20.0)
    assert ks_two_sample(a, a).statistic == 0.0


def test_ks_two_sample_null_calibration(rng):
    p = np.array([ks_two_sample(rng.random(10**4), rng.random(10**4)).p_value for _ in range(100)])
    assert 0.01 <= (p < 0.05).mean() <= 0.12


def test_ks_two_sample_power(rng):
    arcsine = np.sin(np.pi * rng.random(10**4) / 2) ** 2
    assert ks_two_sample(arcsine, rng.random(10**4)).p_value < 1e-6


def test_ks_rejects_tiny_samples():
    with pytest.raises(ValueError):
        ks_one_sample([0.1, 0.2], uniform_cdf)
    with pytest.raises(ValueError):
        ks_two_sample([0.1] * 20, [0.2])


def test_ks_distance_bound_verdict(rng):
    res = ks_one_sample(rng.random(1000), uniform_cdf, d_bound=0.5)
    assert res.passed and res.criterion == "D <= 0.5"


# --- chi-square ---------------------------------------------------------------------


def test_chi_square_exact_counts():
    pmf = lambda m: [0.5, 0.25, 0.125, 0.125][m] if m < 4 else 0.0
    counts = {0: 4000, 1: 2000, 2: 1000, 3: 1000}
    res = chi_square_pmf(counts, pmf, tail_cut=3)
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_chi_square_accepts_true_pmf(rng):
    v = pmf_sampler(1, 0.5, 10**6, rng)
    assert chi_square_pmf(counts_of(v), lambda m: excursion_pmf(1, 0.5, m), tail_cut=40).p_value > 1e-3


def test_chi_square_power(rng):
    v = pmf_sampler(1, 0.5, 10**6, rng)
    assert chi_square_pmf(counts_of(v), lambda m: excursion_pmf(2, 0.5, m), tail_cut=40).p_value < 1e-6


def test_chi_square_pools_small_bins(rng):
    v = pmf_sampler(3, 0.3, 5000, rng)
    res = chi_square_pmf(counts_of(v), lambda m: excursion_pmf(3, 0.3, m), tail_cut=200)
    assert res.extra["tail_cut"] < 200


def test_chi_square_validation():
    with pytest.raises(ValueError):
        chi_square_pmf({0: 10}, lambda m: 1.0, tail_cut=1)
    with pytest.raises(ValueError):
        chi_square_pmf({-1: 5000}, lambda m: 1.0, tail_cut=1)


# --- moments --------------------------------------------------------------------------


def test_moments_of_normal(rng):
    est = moments(rng.standard_normal(10**5))
    assert est.var_se == pytest.approx(np.sqrt(2 / 1e5), rel=0.05)
    assert mean_test(rng.standard_normal(10**5), 0.0).passed
    assert var_test(rng.standard_normal(10**5), 1.0).passed
    assert not mean_test(rng.standard_normal(10**5) + 0.1, 0.0).passed


def test_result_roundtrip_and_line():
    r = TestResult("x", 0.1, 0.5, 10, True, "p > 0.001", {"k": 2})
    assert TestResult.from_dict(r.to_dict()) == r
    assert r.line().startswith("[PASS] x")


# --- occupation aggregators --------------------------------------------------------------


def test_minmax_extreme_path():
    # N = 2, 10 steps, 3 at the origin, everything else on leg 1
    mm = minmax_occupation([[7, 0]], 10)
    assert mm.min_frac[0] == 0.0 and mm.max_frac[0] == 0.7 and mm.sandwich.all()


@given(st.lists(st.integers(0, 1000), min_size=2, max_size=6), st.integers(0, 500))
def test_minmax_sandwich_always_holds(occ, origin):
    n = sum(occ) + origin
    if n == 0:
        return
    assert minmax_occupation([occ], n).sandwich.all()


def test_minmax_rejects_single_leg():
    with pytest.raises(ValueError):
        minmax_occupation([[5]], 5)


def test_minmax_medians_straddle_one_third(rng):
    n, reps = 10**5, 400
    probs = (1 / 3, 1 / 3, 1 / 3)
    occ = np.array([leg_occupation_from_ssrw(simulate_ssrw(n, rng), probs, rng)[0] for _ in range(reps)])
    mm = minmax_occupation(occ, n)
    assert np.median(mm.min_frac) < 1 / 3 < np.median(mm.max_frac)


def test_dyadic_minmax_io_counts():
    run = np.array([[[1, 1, 0], [3, 2, 1], [4, 2, 2]]])
    cps = np.array([2, 6, 8])
    dy = dyadic_minmax(run, cps, f=lambda x: 4.0)
    assert dy.min_frac.tolist() == [[0.0, 1 / 6, 0.25]]
    assert dy.io_counts.tolist() == [2]  # 0 < 1/4 and 1/6 < 1/4, but 0.25 is not < 0.25


def test_quantiles99():
    q = quantiles99(np.arange(101.0))
    assert len(q) == 99 and q[0] == pytest.approx(1.0) and q[-1] == pytest.approx(99.0)
    assert quantiles99([]) == []
